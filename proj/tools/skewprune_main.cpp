// skewprune: skewness-driven structural pruning pipeline.
//
// Subcommands: synth, train, analyze, prune, finetune, eval, cost, report.
// Exit codes: 0 success, 1 usage error, 2 data/model error.

#include "skewprune/cost.hpp"
#include "skewprune/dataio.hpp"
#include "skewprune/fairness.hpp"
#include "skewprune/model.hpp"
#include "skewprune/prune_cnn.hpp"
#include "skewprune/prune_vit.hpp"
#include "skewprune/stats.hpp"
#include "skewprune/trainer.hpp"

#include <CLI11.hpp>
#include <json.hpp>

#include <fstream>
#include <iostream>
#include <optional>
#include <string>

using namespace skewprune;
using nlohmann::json;

namespace {

json load_config(const std::string& path) {
    if (path.empty()) return json::object();
    std::ifstream f(path);
    if (!f.good()) throw std::runtime_error("cannot open config file: " + path);
    json j;
    f >> j;
    return j;
}

SynthConfig synth_config(const json& cfg, std::optional<uint32_t> seed) {
    SynthConfig sc;
    const json s = cfg.value("synth", json::object());
    sc.image_size = s.value("image_size", sc.image_size);
    sc.num_classes = s.value("num_classes", sc.num_classes);
    sc.light_tone_lo = s.value("light_tone_lo", sc.light_tone_lo);
    sc.light_tone_hi = s.value("light_tone_hi", sc.light_tone_hi);
    sc.dark_tone_lo = s.value("dark_tone_lo", sc.dark_tone_lo);
    sc.dark_tone_hi = s.value("dark_tone_hi", sc.dark_tone_hi);
    sc.lesion_area_frac = s.value("lesion_area_frac", sc.lesion_area_frac);
    sc.rho = s.value("rho", sc.rho);
    sc.train = s.value("train", sc.train);
    sc.val = s.value("val", sc.val);
    sc.test = s.value("test", sc.test);
    sc.seed = s.value("seed", sc.seed);
    if (seed) sc.seed = *seed;
    return sc;
}

TrainConfig train_config(const json& cfg, std::optional<uint32_t> seed) {
    TrainConfig tc;
    const json t = cfg.value("train", json::object());
    const std::string opt = t.value("optimizer", std::string("sgd"));
    if (opt == "sgd") tc.optimizer = Optimizer::SgdMomentum;
    else if (opt == "adamw") tc.optimizer = Optimizer::AdamW;
    else throw std::runtime_error("unknown optimizer: " + opt);
    tc.lr = t.value("lr", tc.lr);
    tc.momentum = t.value("momentum", tc.momentum);
    tc.weight_decay = t.value("weight_decay", tc.weight_decay);
    const std::string sch = t.value("scheduler", std::string("plateau"));
    if (sch == "plateau") tc.scheduler = Scheduler::Plateau;
    else if (sch == "cosine") tc.scheduler = Scheduler::CosineWarmup;
    else throw std::runtime_error("unknown scheduler: " + sch);
    tc.plateau_factor = t.value("plateau_factor", tc.plateau_factor);
    tc.plateau_patience = t.value("plateau_patience", tc.plateau_patience);
    tc.warmup_epochs = t.value("warmup_epochs", tc.warmup_epochs);
    tc.max_epochs = t.value("max_epochs", tc.max_epochs);
    tc.batch_size = t.value("batch_size", tc.batch_size);
    tc.seed = t.value("seed", tc.seed);
    tc.freeze = t.value("freeze", tc.freeze);
    if (seed) tc.seed = *seed;
    return tc;
}

ModelSpec build_fresh(const std::string& arch, const json& cfg, uint32_t seed) {
    const json m = cfg.value("model", json::object());
    if (arch == "vgg") {
        VggConfig vc = tiny_vgg(m.value("num_classes", 3));
        vc.image_size = m.value("image_size", vc.image_size);
        if (m.contains("blocks")) vc.blocks = m.at("blocks").get<std::vector<std::vector<int>>>();
        if (m.contains("classifier")) vc.classifier = m.at("classifier").get<std::vector<int>>();
        return build_vgg(vc, seed);
    }
    if (arch == "vit") {
        VitConfig vc = tiny_vit(m.value("num_classes", 3));
        vc.image_size = m.value("image_size", vc.image_size);
        vc.patch = m.value("patch", vc.patch);
        vc.embed_dim = m.value("embed_dim", vc.embed_dim);
        vc.blocks = m.value("blocks", vc.blocks);
        vc.heads = m.value("heads", vc.heads);
        vc.mlp_ratio = m.value("mlp_ratio", vc.mlp_ratio);
        return build_vit(vc, seed);
    }
    throw std::runtime_error("unknown arch: " + arch + " (expected vgg or vit)");
}

std::string model_arch(const ModelSpec& m) { return m.metadata.at("arch").get<std::string>(); }

void write_text(const std::string& path, const std::string& text) {
    std::ofstream f(path);
    if (!f.good()) throw std::runtime_error("cannot write: " + path);
    f << text;
}

int run(int argc, char** argv) {
    CLI::App app{"skewness-driven structural pruning toolkit"};
    app.require_subcommand(1);

    std::string config_path, model_path, data_path, out_path, mode = "block", arch = "vgg";
    std::optional<uint32_t> seed;
    int pattern = 0;

    app.add_option("--config", config_path, "JSON config file");
    app.add_option("--seed", seed, "seed override");
    app.add_option("--model", model_path, "model file");
    app.add_option("--data", data_path, "dataset directory");
    app.add_option("--out", out_path, "output path");
    app.add_option("--pattern", pattern, "ViT pruning pattern 1-6")->check(CLI::Range(1, 6));
    app.add_option("--mode", mode, "CNN pruning mode")->check(CLI::IsMember({"strict", "block"}));
    app.add_option("--arch", arch, "architecture for fresh models")->check(CLI::IsMember({"vgg", "vit"}));

    auto* c_synth = app.add_subcommand("synth", "generate a synthetic biased dataset");
    auto* c_train = app.add_subcommand("train", "train a model from scratch");
    auto* c_analyze = app.add_subcommand("analyze", "collect skewness reports");
    auto* c_prune = app.add_subcommand("prune", "prune a trained model");
    auto* c_finetune = app.add_subcommand("finetune", "fine-tune a pruned model");
    auto* c_eval = app.add_subcommand("eval", "write predictions and fairness metrics");
    auto* c_cost = app.add_subcommand("cost", "report params/FLOPs/memory");
    auto* c_report = app.add_subcommand("report", "merge eval/cost outputs into one table");

    for (CLI::App* sub : app.get_subcommands(nullptr)) sub->fallthrough();

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);  // 0
    } catch (const CLI::ParseError& e) {
        app.exit(e);
        return 1;
    }

    const json cfg = load_config(config_path);

    if (c_synth->parsed()) {
        if (out_path.empty()) throw CLI::ValidationError("--out", "synth requires --out");
        generate_synthetic(synth_config(cfg, seed), out_path);
        std::cout << "dataset written to " << out_path << "\n";
        return 0;
    }

    if (c_train->parsed()) {
        if (data_path.empty() || out_path.empty())
            throw CLI::ValidationError("--data/--out", "train requires --data and --out");
        TrainConfig tc = train_config(cfg, seed);
        ModelSpec start = model_path.empty()
                              ? build_fresh(cfg.value("arch", arch), cfg, seed.value_or(tc.seed))
                              : load_model(model_path);
        auto train_set = load_dataset(data_path, "train");
        auto val_set = load_dataset(data_path, "val");
        auto [best, log] = train(start, train_set, val_set, tc);
        save_model(best, out_path);
        write_text(out_path + ".log.tsv", train_log_to_text(log));
        std::cout << "model written to " << out_path << " (best epoch " << log.best_epoch << ")\n";
        return 0;
    }

    if (c_analyze->parsed()) {
        if (model_path.empty() || data_path.empty() || out_path.empty())
            throw CLI::ValidationError("--model/--data/--out", "analyze requires --model, --data, --out");
        ModelSpec m = load_model(model_path);
        auto val = sample_images(load_dataset(data_path, "val"));
        std::vector<SkewnessReport> reports;
        if (model_arch(m) == "vgg") {
            reports = collect_skewness(m, val, SiteKind::Pool);
        } else {
            for (SiteKind k : {SiteKind::PatchEmbed, SiteKind::Head, SiteKind::BlockInner}) {
                auto part = collect_skewness(m, val, k);
                reports.insert(reports.end(), part.begin(), part.end());
            }
        }
        save_skewness_reports(reports, out_path);
        std::cout << "skewness reports written to " << out_path << "\n";
        return 0;
    }

    if (c_prune->parsed()) {
        if (model_path.empty() || out_path.empty())
            throw CLI::ValidationError("--model/--out", "prune requires --model and --out");
        ModelSpec m = load_model(model_path);
        if (model_arch(m) == "vit") {
            if (pattern == 0) throw CLI::ValidationError("--pattern", "ViT pruning requires --pattern 1-6");
            std::vector<Tensor> images;
            if (!data_path.empty()) images = sample_images(load_dataset(data_path, "val"));
            auto result = apply_pattern(m, PruningPattern::from_id(pattern), images);
            save_model(result.model, out_path);
            write_text(out_path + ".provenance.json", result.provenance.dump(2) + "\n");
        } else {
            std::vector<SkewnessReport> reports;
            if (cfg.contains("reports")) reports = load_skewness_reports(cfg.at("reports"));
            else if (!data_path.empty())
                reports = collect_skewness(m, sample_images(load_dataset(data_path, "val")), SiteKind::Pool);
            else
                throw CLI::ValidationError("--data", "CNN pruning needs --data or a config 'reports' path");
            std::map<std::string, KeepIndexSet> keep;
            for (const SkewnessReport& r : reports) keep[r.site] = select_keep_channels(r);
            ModelSpec pruned = prune_filters(m, keep, mode == "strict" ? PruneMode::Strict : PruneMode::Block);
            save_model(pruned, out_path);
        }
        std::cout << "pruned model written to " << out_path << "\n";
        return 0;
    }

    if (c_finetune->parsed()) {
        if (model_path.empty() || data_path.empty() || out_path.empty())
            throw CLI::ValidationError("--model/--data/--out", "finetune requires --model, --data, --out");
        ModelSpec m = load_model(model_path);
        TrainConfig tc = train_config(cfg, seed);
        auto [tuned, log] = finetune(m, load_dataset(data_path, "train"), load_dataset(data_path, "val"), tc);
        save_model(tuned, out_path);
        write_text(out_path + ".log.tsv", train_log_to_text(log));
        std::cout << "fine-tuned model written to " << out_path << "\n";
        return 0;
    }

    if (c_eval->parsed()) {
        if (model_path.empty() || data_path.empty() || out_path.empty())
            throw CLI::ValidationError("--model/--data/--out", "eval requires --model, --data, --out");
        ModelSpec m = load_model(model_path);
        auto test_set = load_dataset(data_path, "test");
        auto records = evaluate(m, test_set);
        write_predictions(records, out_path);
        write_text(out_path + ".metrics.tsv",
                   fairness_to_text(fairness(records, m.num_classes()), performance(records, m.num_classes())));
        std::cout << "predictions written to " << out_path << "\n";
        return 0;
    }

    if (c_cost->parsed()) {
        if (model_path.empty()) throw CLI::ValidationError("--model", "cost requires --model");
        ModelSpec m = load_model(model_path);
        const std::string text = cost_to_text(cost_report(m));
        if (out_path.empty()) std::cout << text;
        else write_text(out_path, text);
        return 0;
    }

    if (c_report->parsed()) {
        // config: {"runs": [{"name": ..., "metrics": path, "cost": path}, ...]}
        if (out_path.empty()) throw CLI::ValidationError("--out", "report requires --out");
        if (!cfg.contains("runs")) throw std::runtime_error("report needs a config with a 'runs' list");
        std::ostringstream os;
        auto section = [&](const std::string& title, const std::vector<std::string>& keys) {
            os << "## " << title << "\n";
            for (const auto& run : cfg.at("runs")) {
                os << run.at("name").get<std::string>();
                std::map<std::string, std::string> kv;
                const std::string path = title == "Computational Cost"
                                             ? run.at("cost").get<std::string>()
                                             : run.at("metrics").get<std::string>();
                std::ifstream in(path);
                if (!in.good()) throw std::runtime_error("report: cannot open " + path);
                std::string line;
                while (std::getline(in, line)) {
                    const auto tab = line.find('\t');
                    if (tab != std::string::npos) kv[line.substr(0, tab)] = line.substr(tab + 1);
                }
                for (const std::string& k : keys) os << "\t" << k << "=" << (kv.count(k) ? kv[k] : "n/a");
                os << "\n";
            }
        };
        section("Performance", {"accuracy", "macro_precision", "macro_recall", "macro_f1"});
        section("Fairness", {"eopp0", "eopp1", "eodd"});
        section("Computational Cost", {"params", "flops", "memory_mib"});
        write_text(out_path, os.str());
        std::cout << "report written to " << out_path << "\n";
        return 0;
    }

    throw CLI::ValidationError("subcommand", "unknown subcommand");
}

}  // namespace

int main(int argc, char** argv) {
    try {
        return run(argc, argv);
    } catch (const CLI::Error& e) {
        std::cerr << "usage error: " << e.what() << "\n";
        return 1;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    }
}
