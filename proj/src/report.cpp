#include "vlmlab/report.hpp"

#include <cmath>
#include <sstream>
#include <thread>

#include "json.hpp"
#include "vlmlab/io.hpp"
#include "vlmlab/pipeline.hpp"

namespace vlmlab {

using nlohmann::json;

double report_avg(const std::array<double, 9>& acc) {
    double s = 0.0;
    for (double a : acc) s += a;
    return s / 9.0;
}

double report_delta_pp2(const std::array<double, 9>& acc) {
    const double m = report_avg(acc) * 100.0;
    double s = 0.0;
    for (double a : acc) {
        const double d = a * 100.0 - m;
        s += d * d;
    }
    return s / 9.0;
}

PositionReport evaluate(const Model& model, const ProbeDataset& ds, int threads) {
    if (threads < 1) throw ConfigError("evaluate: threads must be >= 1");
    if (ds.eval.empty()) throw ConfigError("evaluate: dataset has no eval split");
    for (int slot = 0; slot < kGridSlots; ++slot) {
        bool has_positive = false;
        for (const auto& s : ds.eval)
            if (s.slot == slot && s.label_yes) has_positive = true;
        if (!has_positive)
            throw ConfigError("evaluate: eval split has no positive sample for slot " +
                              std::to_string(slot));
    }

    std::vector<MultimodalInput> inputs;
    std::vector<int> labels;
    make_examples(ds, ds.eval, inputs, labels);

    std::vector<int> preds(inputs.size(), 0);
    auto work = [&](size_t lo, size_t hi) {
        for (size_t i = lo; i < hi; ++i)
            preds[i] = predicts_yes(model.forward(inputs[i])) ? 1 : 0;
    };
    const int nthreads = std::min<int>(threads, static_cast<int>(inputs.size()));
    if (nthreads <= 1) {
        work(0, inputs.size());
    } else {
        std::vector<std::thread> pool;
        const size_t chunk = (inputs.size() + nthreads - 1) / static_cast<size_t>(nthreads);
        for (int t = 0; t < nthreads; ++t) {
            const size_t lo = static_cast<size_t>(t) * chunk;
            const size_t hi = std::min(inputs.size(), lo + chunk);
            if (lo < hi) pool.emplace_back(work, lo, hi);
        }
        for (auto& th : pool) th.join();
    }

    PositionReport report;
    report.scheme = to_string(model.config().scheme);
    report.seed = model.config().seed;
    report.dataset_hash = ds.manifest.content_hash;

    std::array<int, 9> pos_hits{};
    std::array<int, 9> pos_total{};
    int neg_hits = 0, neg_total = 0, all_hits = 0;
    for (size_t i = 0; i < ds.eval.size(); ++i) {
        const auto& s = ds.eval[i];
        const bool correct = preds[i] == labels[i];
        all_hits += correct ? 1 : 0;
        if (s.label_yes) {
            pos_total[static_cast<size_t>(s.slot)] += 1;
            pos_hits[static_cast<size_t>(s.slot)] += correct ? 1 : 0;
        } else {
            neg_total += 1;
            neg_hits += correct ? 1 : 0;
        }
    }
    for (int slot = 0; slot < kGridSlots; ++slot)
        report.acc[static_cast<size_t>(slot)] =
            static_cast<double>(pos_hits[static_cast<size_t>(slot)]) / pos_total[static_cast<size_t>(slot)];
    report.acc_neg = neg_total > 0 ? static_cast<double>(neg_hits) / neg_total : 0.0;
    report.acc_overall = static_cast<double>(all_hits) / static_cast<double>(ds.eval.size());
    report.avg = report_avg(report.acc);
    report.delta_pp2 = report_delta_pp2(report.acc);
    report.positives_per_slot = pos_total[0];
    report.negatives_total = neg_total;
    return report;
}

ComparisonReport compare(const PositionReport& baseline, const PositionReport& candidate) {
    if (baseline.dataset_hash != candidate.dataset_hash)
        throw ConfigError("compare: reports come from different datasets (hash " +
                          baseline.dataset_hash + " vs " + candidate.dataset_hash + ")");
    ComparisonReport cmp;
    cmp.baseline = baseline;
    cmp.candidate = candidate;
    for (size_t i = 0; i < 9; ++i) cmp.acc_diff[i] = candidate.acc[i] - baseline.acc[i];
    cmp.avg_diff = candidate.avg - baseline.avg;
    cmp.delta_diff = candidate.delta_pp2 - baseline.delta_pp2;
    cmp.variance_reduced = candidate.delta_pp2 < baseline.delta_pp2;
    cmp.avg_non_degraded = candidate.avg >= baseline.avg - 0.02;
    return cmp;
}

namespace {

json report_to_json_obj(const PositionReport& r) {
    json j;
    j["schema_version"] = r.schema_version;
    j["scheme"] = r.scheme;
    j["seed"] = r.seed;
    j["acc"] = r.acc;
    j["acc_neg"] = r.acc_neg;
    j["acc_overall"] = r.acc_overall;
    j["avg"] = r.avg;
    j["delta_pp2"] = r.delta_pp2;
    j["delta_definition"] = "population variance of the 9 slot accuracies in percentage points";
    j["positives_per_slot"] = r.positives_per_slot;
    j["negatives_total"] = r.negatives_total;
    j["dataset_hash"] = r.dataset_hash;
    return j;
}

PositionReport report_from_json_obj(const json& j) {
    PositionReport r;
    try {
        r.schema_version = j.at("schema_version").get<uint32_t>();
        if (r.schema_version != 1)
            throw FormatError("report: unsupported schema version " + std::to_string(r.schema_version));
        r.scheme = j.at("scheme").get<std::string>();
        r.seed = j.at("seed").get<uint64_t>();
        auto acc = j.at("acc").get<std::vector<double>>();
        if (acc.size() != 9) throw FormatError("report: acc must have 9 entries");
        std::copy(acc.begin(), acc.end(), r.acc.begin());
        r.acc_neg = j.at("acc_neg").get<double>();
        r.acc_overall = j.at("acc_overall").get<double>();
        r.avg = j.at("avg").get<double>();
        r.delta_pp2 = j.at("delta_pp2").get<double>();
        r.positives_per_slot = j.at("positives_per_slot").get<int>();
        r.negatives_total = j.at("negatives_total").get<int>();
        r.dataset_hash = j.at("dataset_hash").get<std::string>();
    } catch (const json::exception& e) {
        throw FormatError(std::string("report: missing or invalid field: ") + e.what());
    }
    return r;
}

}  // namespace

std::string report_to_json(const PositionReport& report) {
    return report_to_json_obj(report).dump(2) + "\n";
}

PositionReport report_from_json(const std::string& text) {
    json j;
    try {
        j = json::parse(text);
    } catch (const json::exception& e) {
        throw FormatError(std::string("report: bad json: ") + e.what());
    }
    return report_from_json_obj(j);
}

void write_report_json(const PositionReport& report, const std::string& path) {
    write_file(path, report_to_json(report));
}

PositionReport read_report_json(const std::string& path) {
    return report_from_json(read_file(path));
}

void write_report_csv(const PositionReport& report, const std::string& path) {
    std::ostringstream out;
    out << "# scheme=" << report.scheme << " seed=" << report.seed
        << " dataset_hash=" << report.dataset_hash << "\n";
    out << "slot,accuracy\n";
    for (int slot = 0; slot < kGridSlots; ++slot)
        out << slot << "," << fmt_g17(report.acc[static_cast<size_t>(slot)]) << "\n";
    out << "neg," << fmt_g17(report.acc_neg) << "\n";
    out << "avg," << fmt_g17(report.avg) << "\n";
    out << "delta_pp2," << fmt_g17(report.delta_pp2) << "\n";
    write_file(path, out.str());
}

void write_report_pgm(const PositionReport& report, const std::string& path) {
    Mat grid(kGridSide, kGridSide);
    for (int slot = 0; slot < kGridSlots; ++slot)
        grid.at(slot / kGridSide, slot % kGridSide) = report.acc[static_cast<size_t>(slot)];
    write_pgm(path, grid,
              {"slot accuracy heatmap, scheme=" + report.scheme + " seed=" + std::to_string(report.seed)});
}

std::string comparison_to_json(const ComparisonReport& cmp) {
    json j;
    j["schema_version"] = 1;
    j["baseline"] = report_to_json_obj(cmp.baseline);
    j["candidate"] = report_to_json_obj(cmp.candidate);
    j["acc_diff"] = cmp.acc_diff;
    j["avg_diff"] = cmp.avg_diff;
    j["delta_diff"] = cmp.delta_diff;
    j["variance_reduced"] = cmp.variance_reduced;
    j["avg_non_degraded"] = cmp.avg_non_degraded;
    return j.dump(2) + "\n";
}

void write_comparison_json(const ComparisonReport& cmp, const std::string& path) {
    write_file(path, comparison_to_json(cmp));
}

std::string comparison_to_text(const ComparisonReport& cmp) {
    std::ostringstream out;
    char buf[128];
    out << "slot      ";
    for (int s = 0; s < kGridSlots; ++s) {
        std::snprintf(buf, sizeof(buf), "%8d", s);
        out << buf;
    }
    out << "       avg     delta\n";
    auto line = [&](const char* name, const PositionReport& r) {
        std::snprintf(buf, sizeof(buf), "%-10s", name);
        out << buf;
        for (double a : r.acc) {
            std::snprintf(buf, sizeof(buf), "%8.4f", a);
            out << buf;
        }
        std::snprintf(buf, sizeof(buf), "  %8.4f  %8.4f\n", r.avg, r.delta_pp2);
        out << buf;
    };
    line(cmp.baseline.scheme.c_str(), cmp.baseline);
    line(cmp.candidate.scheme.c_str(), cmp.candidate);
    out << "variance_reduced=" << (cmp.variance_reduced ? "yes" : "no")
        << " avg_non_degraded=" << (cmp.avg_non_degraded ? "yes" : "no") << "\n";
    return out.str();
}

}  // namespace vlmlab
