#include "vlmlab/io.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <cstring>
#include <fstream>
#include <sstream>

namespace vlmlab {

uint64_t fnv1a64(const void* data, size_t len, uint64_t h) {
    const unsigned char* p = static_cast<const unsigned char*>(data);
    for (size_t i = 0; i < len; ++i) {
        h ^= p[i];
        h *= 1099511628211ull;
    }
    return h;
}

uint64_t fnv1a64(const std::string& s) { return fnv1a64(s.data(), s.size()); }

std::string hex64(uint64_t v) {
    char buf[17];
    std::snprintf(buf, sizeof(buf), "%016llx", static_cast<unsigned long long>(v));
    return std::string(buf);
}

std::string read_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError("cannot open file for reading: " + path);
    std::ostringstream ss;
    ss << in.rdbuf();
    if (in.bad()) throw IoError("read failed: " + path);
    return ss.str();
}

void write_file(const std::string& path, const std::string& bytes) {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw IoError("cannot open file for writing: " + path);
    out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
    if (!out) throw IoError("write failed: " + path);
}

void append_u32(std::string& out, uint32_t v) {
    for (int i = 0; i < 4; ++i) out.push_back(static_cast<char>((v >> (8 * i)) & 0xff));
}

void append_u64(std::string& out, uint64_t v) {
    for (int i = 0; i < 8; ++i) out.push_back(static_cast<char>((v >> (8 * i)) & 0xff));
}

void append_f64(std::string& out, double v) {
    uint64_t bits;
    std::memcpy(&bits, &v, sizeof(bits));
    append_u64(out, bits);
}

static void need(const char* p, const char* end, size_t n, const char* what) {
    if (static_cast<size_t>(end - p) < n)
        throw FormatError(std::string("truncated data while reading ") + what);
}

uint32_t read_u32(const char*& p, const char* end) {
    need(p, end, 4, "u32");
    uint32_t v = 0;
    for (int i = 0; i < 4; ++i) v |= static_cast<uint32_t>(static_cast<unsigned char>(p[i])) << (8 * i);
    p += 4;
    return v;
}

uint64_t read_u64(const char*& p, const char* end) {
    need(p, end, 8, "u64");
    uint64_t v = 0;
    for (int i = 0; i < 8; ++i) v |= static_cast<uint64_t>(static_cast<unsigned char>(p[i])) << (8 * i);
    p += 8;
    return v;
}

double read_f64(const char*& p, const char* end) {
    const uint64_t bits = read_u64(p, end);
    double v;
    std::memcpy(&v, &bits, sizeof(v));
    return v;
}

std::string read_bytes(const char*& p, const char* end, size_t n) {
    need(p, end, n, "bytes");
    std::string s(p, n);
    p += n;
    return s;
}

std::string fmt_g17(double v) {
    char buf[64];
    std::snprintf(buf, sizeof(buf), "%.17g", v);
    return std::string(buf);
}

void write_pgm(const std::string& path, const Mat& values,
               const std::vector<std::string>& comment_lines) {
    if (values.rows < 1 || values.cols < 1) throw ShapeError("write_pgm: empty matrix");
    double lo = values.data[0], hi = values.data[0];
    for (double x : values.data) {
        lo = std::min(lo, x);
        hi = std::max(hi, x);
    }
    const double span = hi - lo;
    std::ostringstream out;
    out << "P2\n";
    for (const auto& c : comment_lines) out << "# " << c << "\n";
    out << values.cols << " " << values.rows << "\n255\n";
    for (int r = 0; r < values.rows; ++r) {
        for (int c = 0; c < values.cols; ++c) {
            int px = 0;
            if (span > 0.0)
                px = static_cast<int>(std::lround((values.at(r, c) - lo) / span * 255.0));
            px = std::clamp(px, 0, 255);
            out << px << (c + 1 == values.cols ? "" : " ");
        }
        out << "\n";
    }
    write_file(path, out.str());
}

void write_csv_matrix(const std::string& path, const Mat& values,
                      const std::vector<std::string>& comment_lines) {
    std::ostringstream out;
    for (const auto& c : comment_lines) out << "# " << c << "\n";
    for (int r = 0; r < values.rows; ++r) {
        for (int c = 0; c < values.cols; ++c)
            out << fmt_g17(values.at(r, c)) << (c + 1 == values.cols ? "" : ",");
        out << "\n";
    }
    write_file(path, out.str());
}

}  // namespace vlmlab
