// Command-line driver for the full workflow: dataset generation, training,
// evaluation, occlusion importance, encoder similarity probe, attention flow
// and scheme comparison. All outputs are deterministic for fixed seeds.

#include <cstdio>
#include <filesystem>
#include <iostream>
#include <sstream>

#include "CLI11.hpp"
#include "json.hpp"
#include "vlmlab/analysis.hpp"
#include "vlmlab/config.hpp"
#include "vlmlab/io.hpp"
#include "vlmlab/pipeline.hpp"
#include "vlmlab/report.hpp"
#include "vlmlab/train.hpp"

namespace fs = std::filesystem;
using nlohmann::json;
using namespace vlmlab;

namespace {

// Probe sampling gets a stream distinct from library generation.
uint64_t probe_seed(uint64_t dataset_seed) { return dataset_seed ^ 0xda7a5eed00000001ull; }

void write_manifest(const RunConfig& cfg, const std::string& command, const json& extra) {
    json j;
    j["command"] = command;
    j["config"] = json::parse(cfg.to_json());
    j["outputs"] = extra;
    write_file(cfg.out_dir + "/" + command + "_manifest.json", j.dump(2) + "\n");
}

RunConfig effective_config(const std::string& config_path) {
    if (config_path.empty()) return RunConfig{};
    return RunConfig::from_json_file(config_path);
}

void require_dataset_matches(const RunConfig& cfg, const ProbeDataset& ds) {
    if (ds.manifest.patch_dim != cfg.patch_dim)
        throw ConfigError("dataset patch_dim " + std::to_string(ds.manifest.patch_dim) +
                          " != config patch_dim " + std::to_string(cfg.patch_dim));
    if (ds.manifest.vocab_size != cfg.vocab_size)
        throw ConfigError("dataset vocab_size " + std::to_string(ds.manifest.vocab_size) +
                          " != config vocab_size " + std::to_string(cfg.vocab_size));
}

void cmd_gen(const RunConfig& cfg) {
    cfg.validate();
    fs::create_directories(cfg.out_dir);
    const PatternLibrary lib = gen_library(cfg.vocab_size, cfg.patch_dim, cfg.dataset_seed, cfg.min_distance);
    ProbeOptions opts;
    opts.num_train_keys = cfg.num_train_keys;
    opts.disjoint_splits = cfg.disjoint_splits;
    opts.cell_res = cfg.cell_res;
    opts.train_grids_per_key = cfg.train_grids_per_key;
    const ProbeDataset ds = gen_probe(lib, cfg.num_keys, probe_seed(cfg.dataset_seed), opts);
    const std::string path = cfg.out_dir + "/dataset.json";
    save_dataset(ds, path);
    write_manifest(cfg, "gen",
                   {{"dataset", path},
                    {"dataset_hash", ds.manifest.content_hash},
                    {"train_count", ds.manifest.train_count},
                    {"eval_count", ds.manifest.eval_count}});
    std::cout << "wrote " << path << " (train " << ds.manifest.train_count << ", eval "
              << ds.manifest.eval_count << ", hash " << ds.manifest.content_hash << ")\n";
}

void cmd_train(const RunConfig& cfg, const std::string& dataset_path) {
    cfg.validate();
    fs::create_directories(cfg.out_dir);
    const ProbeDataset ds = load_dataset(dataset_path);
    require_dataset_matches(cfg, ds);

    Model model = Model::init(cfg.model_config());
    std::vector<MultimodalInput> inputs;
    std::vector<int> labels;
    make_examples(ds, ds.train, inputs, labels);
    const auto log = train_model(model, inputs, labels, cfg.train_config());

    const std::string ckpt = cfg.out_dir + "/checkpoint.bin";
    model.save(ckpt);
    std::ostringstream csv;
    csv << "step,loss\n";
    for (const auto& e : log) csv << e.step << "," << fmt_g17(e.loss) << "\n";
    const std::string log_path = cfg.out_dir + "/train_log.csv";
    write_file(log_path, csv.str());
    write_manifest(cfg, "train",
                   {{"checkpoint", ckpt},
                    {"train_log", log_path},
                    {"dataset_hash", ds.manifest.content_hash},
                    {"final_loss", log.empty() ? 0.0 : log.back().loss}});
    std::cout << "trained " << cfg.scheme << " model (seed " << cfg.model_seed << ", final loss "
              << (log.empty() ? 0.0 : log.back().loss) << ") -> " << ckpt << "\n";
}

void cmd_eval(const RunConfig& cfg, const std::string& checkpoint_path, const std::string& dataset_path) {
    fs::create_directories(cfg.out_dir);
    const Model model = Model::load(checkpoint_path);
    const ProbeDataset ds = load_dataset(dataset_path);
    const PositionReport report = evaluate(model, ds, cfg.threads);
    write_report_json(report, cfg.out_dir + "/report.json");
    write_report_csv(report, cfg.out_dir + "/report.csv");
    write_report_pgm(report, cfg.out_dir + "/accuracy.pgm");
    write_manifest(cfg, "eval",
                   {{"report", cfg.out_dir + "/report.json"},
                    {"dataset_hash", ds.manifest.content_hash},
                    {"avg", report.avg},
                    {"delta_pp2", report.delta_pp2}});
    std::printf("scheme=%s seed=%llu avg=%.4f delta_pp2=%.4f acc_neg=%.4f\n", report.scheme.c_str(),
                static_cast<unsigned long long>(report.seed), report.avg, report.delta_pp2,
                report.acc_neg);
}

void cmd_occlude(const RunConfig& cfg, const std::string& checkpoint_path, const std::string& dataset_path) {
    fs::create_directories(cfg.out_dir);
    const Model model = Model::load(checkpoint_path);
    const ProbeDataset ds = load_dataset(dataset_path);
    const Vec background(static_cast<size_t>(model.config().patch_dim), cfg.background_value);
    const int side = kGridSide * ds.manifest.cell_res;

    const std::vector<std::string> meta = {
        "aggregation: per-sample min-max normalization, then mean over samples",
        "score: yes-logit(original) - yes-logit(region masked to background)"};

    int hits = 0, total = 0;
    for (int slot = 0; slot < kGridSlots; ++slot) {
        std::vector<ImportanceMap> maps;
        for (const CompositeSample* s : eval_for_slot(ds, slot)) {
            if (!s->label_yes) continue;
            const MultimodalInput input = make_input(ds.lib, *s, ds.manifest.cell_res);
            ImportanceMap map =
                occlusion_importance(model, input, cfg.region_rows, cfg.region_cols, background);
            // localization: does the strongest region contain the key cell?
            int arg = 0;
            for (int r = 1; r < map.rows * map.cols; ++r)
                if (map.scores.data[static_cast<size_t>(r)] > map.scores.data[static_cast<size_t>(arg)]) arg = r;
            const int key_pr = (slot / kGridSide) * ds.manifest.cell_res;
            const int key_pc = (slot % kGridSide) * ds.manifest.cell_res;
            const int key_region = (key_pr / (side / cfg.region_rows)) * cfg.region_cols +
                                   (key_pc / (side / cfg.region_cols));
            hits += (arg == key_region) ? 1 : 0;
            ++total;
            maps.push_back(std::move(map));
        }
        const Mat agg = aggregate_importance(maps);
        const std::string base = cfg.out_dir + "/importance_slot" + std::to_string(slot);
        write_csv_matrix(base + ".csv", agg, meta);
        write_pgm(base + ".pgm", agg, meta);
    }
    const double rate = total > 0 ? static_cast<double>(hits) / total : 0.0;
    json summary = {{"positives", total},
                    {"argmax_on_key_slot", hits},
                    {"localization_rate", rate},
                    {"region_rows", cfg.region_rows},
                    {"region_cols", cfg.region_cols}};
    write_file(cfg.out_dir + "/occlusion_summary.json", summary.dump(2) + "\n");
    write_manifest(cfg, "occlude", summary);
    std::printf("occlusion localization rate: %.4f (%d/%d positives)\n", rate, hits, total);
}

void cmd_simprobe(const RunConfig& cfg, const std::string& checkpoint_path, const std::string& dataset_path) {
    fs::create_directories(cfg.out_dir);
    const Model model = Model::load(checkpoint_path);
    const ProbeDataset ds = load_dataset(dataset_path);
    std::vector<int> ids(static_cast<size_t>(ds.lib.vocab_size));
    for (int i = 0; i < ds.lib.vocab_size; ++i) ids[static_cast<size_t>(i)] = i;
    const auto records = similarity_probe(model, ds.lib, ids, ds.manifest.cell_res);

    std::ostringstream csv;
    csv << "# encoder=" << to_string(model.config().encoder) << "\n";
    csv << "slot,score\n";
    double lo = records[0].score, hi = records[0].score;
    for (const auto& r : records) {
        csv << r.slot << "," << fmt_g17(r.score) << "\n";
        lo = std::min(lo, r.score);
        hi = std::max(hi, r.score);
    }
    write_file(cfg.out_dir + "/similarity.csv", csv.str());
    write_manifest(cfg, "simprobe",
                   {{"similarity", cfg.out_dir + "/similarity.csv"},
                    {"encoder", to_string(model.config().encoder)},
                    {"min_score", lo},
                    {"max_score", hi},
                    {"spread", hi - lo}});
    std::printf("similarity per slot: min=%.6f max=%.6f spread=%.3e\n", lo, hi, hi - lo);
}

void cmd_flow(const RunConfig& cfg, const std::string& checkpoint_path, const std::string& dataset_path) {
    fs::create_directories(cfg.out_dir);
    const Model model = Model::load(checkpoint_path);
    const ProbeDataset ds = load_dataset(dataset_path);
    std::vector<MultimodalInput> positives;
    for (const auto& s : ds.eval)
        if (s.label_yes) positives.push_back(make_input(ds.lib, s, ds.manifest.cell_res));
    const AttentionFlowMap flow = attention_flow(model, positives);
    const double cov = coefficient_of_variation(flow.mean_received);

    std::ostringstream csv;
    csv << "image_token,mean_received\n";
    for (size_t t = 0; t < flow.mean_received.size(); ++t)
        csv << t << "," << fmt_g17(flow.mean_received[t]) << "\n";
    write_file(cfg.out_dir + "/flow.csv", csv.str());

    const int side = kGridSide * ds.manifest.cell_res;
    Mat grid(side, side);
    for (int t = 0; t < side * side; ++t)
        grid.at(t / side, t % side) = flow.mean_received[static_cast<size_t>(t)];
    write_pgm(cfg.out_dir + "/flow.pgm", grid,
              {"mean text-to-image attention per image token, scheme=" +
               to_string(model.config().scheme)});

    json summary = {{"cov", cov},
                    {"total_text_to_image", flow.total_text_to_image},
                    {"text_query_count", flow.text_query_count},
                    {"sample_count", flow.sample_count},
                    {"scheme", to_string(model.config().scheme)}};
    write_file(cfg.out_dir + "/flow_summary.json", summary.dump(2) + "\n");
    write_manifest(cfg, "flow", summary);
    std::printf("flow cov=%.6f over %zu image tokens (%d samples)\n", cov,
                flow.mean_received.size(), flow.sample_count);
}

void cmd_compare(const RunConfig& cfg, const std::string& baseline_path, const std::string& candidate_path) {
    fs::create_directories(cfg.out_dir);
    const PositionReport a = read_report_json(baseline_path);
    const PositionReport b = read_report_json(candidate_path);
    const ComparisonReport cmp = compare(a, b);
    write_comparison_json(cmp, cfg.out_dir + "/comparison.json");
    write_manifest(cfg, "compare",
                   {{"comparison", cfg.out_dir + "/comparison.json"},
                    {"variance_reduced", cmp.variance_reduced},
                    {"avg_non_degraded", cmp.avg_non_degraded}});
    std::cout << comparison_to_text(cmp);
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"desk-scale vision-language position-assignment laboratory"};
    app.require_subcommand(1);

    std::string config_path, dataset_path, checkpoint_path, baseline_path, candidate_path;
    std::string out_override, scheme_override;
    uint64_t seed_override = 0;
    bool seed_set = false, scheme_set = false, out_set = false;
    int threads_override = 0;

    auto add_common = [&](CLI::App* sub) {
        sub->add_option("--config", config_path, "JSON run config (defaults apply to missing keys)");
        sub->add_option("--out", out_override, "output directory")->each([&](const std::string&) { out_set = true; });
        sub->add_option("--seed", seed_override, "override the command's primary seed")
            ->each([&](const std::string&) { seed_set = true; });
    };

    CLI::App* gen = app.add_subcommand("gen", "generate the composite-grid probe dataset");
    add_common(gen);

    CLI::App* train = app.add_subcommand("train", "train a model on a dataset's train split");
    add_common(train);
    train->add_option("--dataset", dataset_path, "dataset file from gen")->required();
    train->add_option("--scheme", scheme_override, "position scheme: sequential | bapa")
        ->each([&](const std::string&) { scheme_set = true; });

    CLI::App* eval_cmd = app.add_subcommand("eval", "per-slot accuracy report for a checkpoint");
    add_common(eval_cmd);
    eval_cmd->add_option("--checkpoint", checkpoint_path, "model checkpoint")->required();
    eval_cmd->add_option("--dataset", dataset_path, "dataset file")->required();
    eval_cmd->add_option("--threads", threads_override, "worker threads for evaluation (1 = fully serial)");

    CLI::App* occlude = app.add_subcommand("occlude", "region-occlusion importance maps");
    add_common(occlude);
    occlude->add_option("--checkpoint", checkpoint_path, "model checkpoint")->required();
    occlude->add_option("--dataset", dataset_path, "dataset file")->required();

    CLI::App* simprobe = app.add_subcommand("simprobe", "encoder similarity probe across slots");
    add_common(simprobe);
    simprobe->add_option("--checkpoint", checkpoint_path, "model checkpoint")->required();
    simprobe->add_option("--dataset", dataset_path, "dataset file (pattern library source)")->required();

    CLI::App* flow = app.add_subcommand("flow", "text-to-image attention flow map");
    add_common(flow);
    flow->add_option("--checkpoint", checkpoint_path, "model checkpoint")->required();
    flow->add_option("--dataset", dataset_path, "dataset file")->required();

    CLI::App* cmp = app.add_subcommand("compare", "compare two eval reports (baseline vs candidate)");
    add_common(cmp);
    cmp->add_option("--baseline", baseline_path, "baseline report.json")->required();
    cmp->add_option("--candidate", candidate_path, "candidate report.json")->required();

    try {
        app.parse(argc, argv);

        RunConfig cfg = effective_config(config_path);
        if (out_set) cfg.out_dir = out_override;
        if (scheme_set) cfg.scheme = scheme_override;
        if (threads_override > 0) cfg.threads = threads_override;

        if (gen->parsed()) {
            if (seed_set) cfg.dataset_seed = seed_override;
            cmd_gen(cfg);
        } else if (train->parsed()) {
            if (seed_set) cfg.model_seed = seed_override;
            cmd_train(cfg, dataset_path);
        } else if (eval_cmd->parsed()) {
            cmd_eval(cfg, checkpoint_path, dataset_path);
        } else if (occlude->parsed()) {
            cmd_occlude(cfg, checkpoint_path, dataset_path);
        } else if (simprobe->parsed()) {
            cmd_simprobe(cfg, checkpoint_path, dataset_path);
        } else if (flow->parsed()) {
            cmd_flow(cfg, checkpoint_path, dataset_path);
        } else if (cmp->parsed()) {
            cmd_compare(cfg, baseline_path, candidate_path);
        }
        return 0;
    } catch (const CLI::ParseError& e) {
        return app.exit(e);
    } catch (const vlmlab::Error& e) {
        std::cerr << "error: " << e.what() << "\n";
        return static_cast<int>(e.exit_code());
    } catch (const std::exception& e) {
        std::cerr << "unexpected error: " << e.what() << "\n";
        return 1;
    }
}
