#pragma once

#include <array>
#include <cstdint>
#include <string>

#include "vlmlab/model.hpp"
#include "vlmlab/probe.hpp"

namespace vlmlab {

// Per-slot accuracy summary for one (model, dataset) pair. acc/avg are
// fractions in [0, 1]; delta_pp2 is the population variance of the nine slot
// accuracies expressed in percentage points (percent^2 units), the
// convention the report schema documents.
struct PositionReport {
    uint32_t schema_version = 1;
    std::string scheme;
    uint64_t seed = 0;  // model seed
    std::array<double, 9> acc{};
    double acc_neg = 0.0;
    double acc_overall = 0.0;
    double avg = 0.0;
    double delta_pp2 = 0.0;
    int positives_per_slot = 0;
    int negatives_total = 0;
    std::string dataset_hash;
};

// Accuracy per slot over positives; negatives reported separately. Every
// slot must be covered by the eval split. threads > 1 fans prediction out
// over a worker pool; results are integers, so any thread count yields the
// identical report.
PositionReport evaluate(const Model& model, const ProbeDataset& ds, int threads = 1);

// Summary stats from a slot-accuracy vector (fractions). delta is the
// population variance of the percent-scaled values.
double report_avg(const std::array<double, 9>& acc);
double report_delta_pp2(const std::array<double, 9>& acc);

struct ComparisonReport {
    PositionReport baseline;
    PositionReport candidate;
    std::array<double, 9> acc_diff{};  // candidate - baseline
    double avg_diff = 0.0;
    double delta_diff = 0.0;
    bool variance_reduced = false;   // candidate delta strictly lower
    bool avg_non_degraded = false;   // candidate avg >= baseline avg - 2pp
};

// Both reports must carry the same dataset hash.
ComparisonReport compare(const PositionReport& baseline, const PositionReport& candidate);

std::string report_to_json(const PositionReport& report);
PositionReport report_from_json(const std::string& text);
void write_report_json(const PositionReport& report, const std::string& path);
PositionReport read_report_json(const std::string& path);
void write_report_csv(const PositionReport& report, const std::string& path);
// 3x3 slot-accuracy heatmap, row-major slots.
void write_report_pgm(const PositionReport& report, const std::string& path);

std::string comparison_to_json(const ComparisonReport& cmp);
void write_comparison_json(const ComparisonReport& cmp, const std::string& path);
// Human-readable side-by-side table.
std::string comparison_to_text(const ComparisonReport& cmp);

}  // namespace vlmlab
