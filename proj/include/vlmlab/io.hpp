#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "vlmlab/errors.hpp"
#include "vlmlab/numeric.hpp"

namespace vlmlab {

// FNV-1a 64-bit over raw bytes.
uint64_t fnv1a64(const void* data, size_t len, uint64_t h = 14695981039346656037ull);
uint64_t fnv1a64(const std::string& s);
std::string hex64(uint64_t v);

std::string read_file(const std::string& path);           // IoError if unreadable
void write_file(const std::string& path, const std::string& bytes);

// Little-endian binary appenders/readers for the container formats.
void append_u32(std::string& out, uint32_t v);
void append_u64(std::string& out, uint64_t v);
void append_f64(std::string& out, double v);
uint32_t read_u32(const char*& p, const char* end);
uint64_t read_u64(const char*& p, const char* end);
double read_f64(const char*& p, const char* end);
std::string read_bytes(const char*& p, const char* end, size_t n);

// Deterministic decimal rendering with round-trip precision (%.17g).
std::string fmt_g17(double v);

// Plain (ASCII, P2) portable graymap, values min-max scaled to 0..255.
// comment_lines go after the magic as '#' comments.
void write_pgm(const std::string& path, const Mat& values,
               const std::vector<std::string>& comment_lines = {});

// CSV matrix with optional '#' metadata lines at the top.
void write_csv_matrix(const std::string& path, const Mat& values,
                      const std::vector<std::string>& comment_lines = {});

}  // namespace vlmlab
