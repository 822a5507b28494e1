#include <csignal>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iostream>
#include <sstream>
#include <string>
#include <thread>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "forgescore/dataset.hpp"
#include "forgescore/error.hpp"
#include "forgescore/fusion.hpp"
#include "forgescore/labels.hpp"
#include "forgescore/manifest.hpp"
#include "forgescore/metrics.hpp"
#include "forgescore/review.hpp"
#include "forgescore/review_server.hpp"
#include "forgescore/robustness.hpp"
#include "forgescore/scoring.hpp"
#include "forgescore/synth.hpp"

namespace fs = std::filesystem;
using nlohmann::json;
using namespace forgescore;

namespace {

enum ExitCode { ok = 0, usage = 1, data = 2, numeric = 3 };

json read_json(const fs::path& path)
{
    std::ifstream in(path);
    if (!in) throw data_error("cannot open " + path.string());
    try {
        return json::parse(in);
    } catch (const json::exception& e) {
        throw data_error(path.string() + ": " + e.what());
    }
}

void write_text(const fs::path& path, const std::string& text)
{
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw data_error("cannot write " + path.string());
    out << text;
    if (!out) throw data_error("write failed: " + path.string());
}

void write_json(const fs::path& path, const json& j) { write_text(path, j.dump(2) + "\n"); }

fs::path prepare_out(const json& cfg)
{
    fs::path out = cfg.at("out").get<std::string>();
    std::error_code ec;
    fs::create_directories(out, ec);
    if (ec) throw data_error("cannot create output directory " + out.string() + ": " + ec.message());
    return out;
}

void write_run_json(const fs::path& out, const std::string& command, const json& cfg)
{
    write_json(out / "run.json", {{"command", command}, {"config", cfg}, {"timestamp", utc_timestamp()}});
}

std::string need_path(const json& cfg, const std::string& key)
{
    if (!cfg.contains(key) || !cfg[key].is_string() || cfg[key].get<std::string>().empty()) {
        throw usage_error("missing required option --" + key + " (or '" + key + "' in the config file)");
    }
    return cfg[key].get<std::string>();
}

std::string cohort_id_of(const std::vector<VideoManifest>& cohort)
{
    return cohort.empty() ? std::string() : cohort.front().cohort_id;
}

std::vector<LabeledVideo> read_labels(const fs::path& path, std::string* cohort_id)
{
    auto j = read_json(path);
    std::vector<LabeledVideo> out;
    try {
        if (cohort_id) *cohort_id = j.value("cohort_id", "");
        for (const auto& v : j.at("videos")) out.push_back(labeled_from_json(v));
    } catch (const json::exception& e) {
        throw data_error(path.string() + ": " + e.what());
    }
    return out;
}

SplitManifest read_split(const fs::path& path)
{
    try {
        return split_from_json(read_json(path));
    } catch (const json::exception& e) {
        throw data_error(path.string() + ": " + e.what());
    }
}

ConfidenceOrientation parse_orientation(const std::string& s)
{
    if (s == "verbatim") return ConfidenceOrientation::verbatim;
    if (s == "inverted") return ConfidenceOrientation::inverted;
    throw usage_error("--confidence-orientation must be 'verbatim' or 'inverted', got '" + s + "'");
}

Perturbation parse_perturb(const json& cfg)
{
    try {
        return Perturbation::parse(cfg.at("perturb").get<std::string>());
    } catch (const Error&) {
        throw;
    } catch (const std::exception& e) {
        throw usage_error(std::string("--perturb: ") + e.what());
    }
}

std::string fmt(double v)
{
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.10g", v);
    return buf;
}

// A subcommand with layered configuration: defaults < --config file < explicit flags.
struct Command {
    CLI::App* app = nullptr;
    json defaults;
    std::string config_file;
    std::vector<std::pair<CLI::Option*, std::function<void(json&)>>> overrides;
    std::function<void(const json&)> run;

    template <typename T>
    CLI::Option* flag(const std::string& names, T& var, const std::string& pointer, const std::string& help)
    {
        auto* opt = app->add_option(names, var, help);
        overrides.emplace_back(opt, [&var, pointer](json& cfg) { cfg[json::json_pointer(pointer)] = var; });
        return opt;
    }

    json resolve() const
    {
        json cfg = defaults;
        if (!config_file.empty()) {
            json file = read_json(config_file);
            if (file.contains("command") && file.contains("config")) file = file["config"];  // a previous run.json
            if (!file.is_object()) throw usage_error("config file " + config_file + " must hold a JSON object");
            for (const auto& [key, value] : file.items()) {
                if (!defaults.contains(key)) throw usage_error("config file " + config_file + ": unknown key '" + key + "'");
            }
            cfg.merge_patch(file);
        }
        for (const auto& [opt, apply] : overrides) {
            if (opt->count() > 0) apply(cfg);
        }
        return cfg;
    }
};

void run_synth(const json& cfg)
{
    auto spec = synth_spec_from_json(cfg.at("synth"));
    auto out = prepare_out(cfg);
    auto cohort = generate(spec, out);
    write_run_json(out, "synth", cfg);
    std::cout << "generated " << cohort.size() << " videos in " << out.string() << "\n";
}

void run_score(const json& cfg)
{
    auto cohort = load_cohort(need_path(cfg, "cohort"));
    ScoringOptions opts;
    opts.border = cfg.at("border").get<std::size_t>();
    opts.consistency.window = cfg.at("window").get<std::size_t>();
    opts.perturbation = parse_perturb(cfg);
    auto workers = cfg.at("workers").get<std::size_t>();
    if (workers < 1) throw usage_error("--workers must be >= 1");
    auto out = prepare_out(cfg);

    auto result = score_cohort(cohort, opts, workers);
    json videos = json::array();
    for (const auto& v : result.videos) {
        videos.push_back({{"video_id", v.video_id},
                          {"is_real", v.is_real},
                          {"planted_label", v.planted_label ? json(*v.planted_label) : json(nullptr)},
                          {"scores", to_json(v.scores)}});
    }
    for (const auto& w : result.warnings) std::cerr << "warning: " << w << "\n";
    write_json(out / "scores.json", {{"cohort_id", cohort_id_of(cohort)}, {"videos", videos}, {"warnings", result.warnings}});
    write_run_json(out, "score", cfg);
    std::cout << "scored " << result.videos.size() << " videos -> " << (out / "scores.json").string() << "\n";
}

void run_label(const json& cfg)
{
    fs::path scores_path = need_path(cfg, "scores");
    auto orientation = parse_orientation(cfg.at("confidence_orientation").get<std::string>());
    auto j = read_json(scores_path);
    std::vector<ScoredVideo> scored;
    std::string cohort_id;
    try {
        cohort_id = j.value("cohort_id", "");
        for (const auto& v : j.at("videos")) {
            ScoredVideo s;
            s.video_id = v.at("video_id").get<std::string>();
            s.is_real = v.at("is_real").get<bool>();
            s.scores = scores_from_json(v.at("scores"));
            if (v.contains("planted_label") && !v["planted_label"].is_null()) s.planted_label = v["planted_label"].get<int>();
            scored.push_back(std::move(s));
        }
    } catch (const json::exception& e) {
        throw data_error(scores_path.string() + ": " + e.what());
    }
    auto out = prepare_out(cfg);
    auto labeled = label_cohort(scored, orientation);

    std::size_t fakes = 0, matched = 0;
    std::map<std::string, std::size_t> class_counts;
    json videos = json::array();
    for (const auto& v : labeled) {
        ++class_counts[label_name(v.label)];
        if (!v.is_real && v.planted_label) {
            ++fakes;
            if (*v.planted_label == code(v.label)) ++matched;
        }
        videos.push_back(to_json(v));
    }
    json agreement = {{"fakes", fakes}, {"matched", matched}};
    agreement["rate"] = fakes ? json(static_cast<double>(matched) / static_cast<double>(fakes)) : json(nullptr);
    write_json(out / "labels.json", {{"cohort_id", cohort_id},
                                     {"confidence_orientation", cfg.at("confidence_orientation")},
                                     {"class_counts", class_counts},
                                     {"planted_agreement", agreement},
                                     {"videos", videos}});
    write_run_json(out, "label", cfg);
    std::cout << "labeled " << labeled.size() << " videos -> " << (out / "labels.json").string() << "\n";
    if (fakes) std::cout << "planted-label agreement: " << matched << "/" << fakes << "\n";
}

void run_split(const json& cfg)
{
    std::string cohort_id;
    auto labeled = read_labels(need_path(cfg, "labels"), &cohort_id);
    auto seed = cfg.at("seed").get<std::uint64_t>();
    if (cfg.contains("journal") && cfg["journal"].is_string()) {
        fs::path journal = cfg["journal"].get<std::string>();
        if (!fs::exists(journal)) throw data_error("journal not found: " + journal.string());
        labeled = apply_reviews(std::move(labeled), fold(ReviewJournal::replay(journal)));
    }
    auto out = prepare_out(cfg);
    auto split = split_cohort(labeled, seed, cohort_id);
    write_json(out / "split.json", to_json(split));
    write_run_json(out, "split", cfg);

    std::map<std::string, std::size_t> pending;
    for (const auto& v : labeled) {
        if (std::find(split.pending_review.begin(), split.pending_review.end(), v.video_id) != split.pending_review.end()) {
            ++pending[label_name(v.label)];
        }
    }
    std::cout << "train " << split.train.size() << ", val " << split.val.size() << ", pending " << split.pending_review.size()
              << ", rejected " << split.rejected.size() << "\n";
    for (const auto& [name, n] : pending) std::cout << "  pending " << name << ": " << n << "\n";
}

void run_train(const json& cfg)
{
    auto cohort = load_cohort(need_path(cfg, "cohort"));
    auto labeled = read_labels(need_path(cfg, "labels"), nullptr);
    auto split = read_split(need_path(cfg, "split"));
    auto config = fusion_config_from_json(cfg.at("fusion"));
    if (!split.pending_review.empty()) {
        std::cerr << "warning: " << split.pending_review.size() << " video(s) still pending review are excluded\n";
    }
    auto requests = split_requests(split, labeled);
    auto train_set = build_samples(cohort, requests.train);
    auto val_set = build_samples(cohort, requests.val);
    if (train_set.empty()) throw data_error("split " + cfg.at("split").get<std::string>() + " has an empty training set");

    const auto& first = train_set.front();
    config.token_dim = first.tokens.channels();
    config.token_count = first.tokens.tokens();
    config.frames = first.tokens.frames();
    config.fused_dim = first.f_y.size();
    auto by_id = std::find_if(cohort.begin(), cohort.end(), [&](const auto& m) { return m.video_id == first.video_id; });
    config.depth_feat_shape = load_depth_features(*by_id).shape();
    config.validate();

    auto out = prepare_out(cfg);
    auto result = train(train_set, val_set, config);
    json meta = {{"cohort_id", split.cohort_id},
                 {"train_size", train_set.size()},
                 {"val_size", val_set.size()},
                 {"best_epoch", result.best_epoch},
                 {"best_val_acc", result.best_val_acc}};
    save_checkpoint(out / "checkpoint", result.params, config, meta);

    std::string csv = "epoch,train_loss,val_loss,val_acc\n";
    for (const auto& e : result.curve) {
        csv += std::to_string(e.epoch) + "," + fmt(e.train_loss) + "," + fmt(e.val_loss) + "," + fmt(e.val_acc) + "\n";
    }
    write_text(out / "loss_curve.csv", csv);
    json resolved = cfg;
    resolved["fusion"] = to_json(config);
    write_run_json(out, "train", resolved);
    std::cout << "trained " << result.curve.size() << " epochs on " << train_set.size() << " videos; best val acc "
              << result.best_val_acc << " at epoch " << result.best_epoch << "\n";
}

json predictions_json(const Predictions& p)
{
    json samples = json::array();
    for (std::size_t i = 0; i < p.video_ids.size(); ++i) {
        samples.push_back({{"video_id", p.video_ids[i]}, {"label", p.labels[i]}, {"pred", p.preds[i]}, {"probs", p.probabilities[i]}});
    }
    return {{"samples", samples}};
}

Predictions read_predictions(const fs::path& path)
{
    auto j = read_json(path);
    Predictions p;
    try {
        for (const auto& s : j.at("samples")) {
            p.video_ids.push_back(s.value("video_id", ""));
            p.labels.push_back(s.at("label").get<int>());
            p.preds.push_back(s.at("pred").get<int>());
            ProbRow row{};
            if (s.contains("probs") && !s["probs"].is_null()) {
                auto v = s["probs"].get<std::vector<double>>();
                if (v.size() != row.size()) throw data_error(path.string() + ": probs of " + p.video_ids.back() + " must have 4 entries");
                std::copy(v.begin(), v.end(), row.begin());
            } else if (p.preds.back() >= 0 && p.preds.back() < 4) {
                row[static_cast<std::size_t>(p.preds.back())] = 1.0;
            }
            p.probabilities.push_back(row);
        }
    } catch (const json::exception& e) {
        throw data_error(path.string() + ": " + e.what());
    }
    for (std::size_t i = 0; i < p.labels.size(); ++i) {
        if (p.labels[i] < 0 || p.labels[i] > 3 || p.preds[i] < 0 || p.preds[i] > 3) {
            throw data_error(path.string() + ": label/pred out of range for sample '" + p.video_ids[i] + "'");
        }
    }
    return p;
}

void run_eval(const json& cfg)
{
    auto perturbation = parse_perturb(cfg);
    if (cfg.contains("predictions") && cfg["predictions"].is_string()) {
        if (!perturbation.is_identity()) throw usage_error("--perturb needs a checkpoint, not a predictions file");
        auto report = evaluate(read_predictions(cfg["predictions"].get<std::string>()));
        auto out = prepare_out(cfg);
        write_json(out / "eval_report.json", to_json(report));
        write_text(out / "confusion.csv", confusion_csv(report.confusion));
        write_run_json(out, "eval", cfg);
        std::cout << "acc " << report.acc << ", macro AUC " << report.macro_ovr_auc << ", binary acc " << report.binary_acc << "\n";
        return;
    }

    auto cohort = load_cohort(need_path(cfg, "cohort"));
    auto labeled = read_labels(need_path(cfg, "labels"), nullptr);
    auto split = read_split(need_path(cfg, "split"));
    auto params = load_checkpoint(need_path(cfg, "checkpoint"));
    auto requests = split_requests(split, labeled);
    auto set = cfg.at("set").get<std::string>();
    std::vector<SampleRequest> chosen;
    if (set == "val" || set == "all") chosen.insert(chosen.end(), requests.val.begin(), requests.val.end());
    if (set == "train" || set == "all") chosen.insert(chosen.end(), requests.train.begin(), requests.train.end());
    if (set != "val" && set != "train" && set != "all") throw usage_error("--set must be val, train or all");
    for (auto& r : chosen) r.weight = 1.0;
    if (chosen.empty()) throw data_error("no videos in the '" + set + "' set of " + cfg.at("split").get<std::string>());
    auto workers = cfg.at("workers").get<std::size_t>();
    if (workers < 1) throw usage_error("--workers must be >= 1");

    auto out = prepare_out(cfg);
    if (perturbation.is_identity()) {
        auto preds = predict_all(build_samples(cohort, chosen), params);
        auto report = evaluate(preds);
        write_json(out / "eval_report.json", to_json(report));
        write_json(out / "predictions.json", predictions_json(preds));
        write_text(out / "confusion.csv", confusion_csv(report.confusion));
        std::cout << "acc " << report.acc << ", macro AUC " << report.macro_ovr_auc << ", binary acc " << report.binary_acc << "\n";
    } else {
        auto report = robustness_eval(cohort, chosen, params, perturbation, workers);
        write_json(out / "robustness_report.json", to_json(report));
        write_json(out / "eval_report.json", to_json(report.perturbed));
        write_text(out / "confusion.csv", confusion_csv(report.perturbed.confusion));
        std::cout << perturbation.describe() << ": acc " << report.clean.acc << " -> " << report.perturbed.acc << "\n";
    }
    write_run_json(out, "eval", cfg);
}

void run_serve(const json& cfg)
{
    auto cohort = load_cohort(need_path(cfg, "cohort"));
    std::string cohort_id;
    auto labeled = read_labels(need_path(cfg, "labels"), &cohort_id);
    auto out = prepare_out(cfg);
    fs::path journal = cfg.contains("journal") && cfg["journal"].is_string() ? fs::path(cfg["journal"].get<std::string>())
                                                                             : out / "review_journal.jsonl";
    ReviewSession session({journal, out / "split.json", {}});
    session.prepare(std::move(labeled), std::move(cohort), cohort_id, cfg.at("seed").get<std::uint64_t>());

    ServerOptions opts;
    opts.bind = cfg.at("bind").get<std::string>();
    opts.port = cfg.at("port").get<int>();
    if (cfg.contains("ui_dir") && cfg["ui_dir"].is_string()) opts.ui_dir = cfg["ui_dir"].get<std::string>();
    ReviewServer server(session, opts);

    sigset_t signals;
    sigemptyset(&signals);
    sigaddset(&signals, SIGINT);
    sigaddset(&signals, SIGTERM);
    pthread_sigmask(SIG_BLOCK, &signals, nullptr);

    int port = server.bind();
    write_run_json(out, "serve", cfg);
    std::cout << "review service on http://" << opts.bind << ":" << port << " (journal " << journal.string() << ")"
              << std::endl;
    std::thread worker([&] { server.serve(); });
    int sig = 0;
    sigwait(&signals, &sig);
    server.stop();
    worker.join();
    std::cout << "stopped" << std::endl;
}

int exit_code(const Error& e)
{
    switch (e.kind()) {
    case ErrorKind::usage: return usage;
    case ErrorKind::data: return data;
    case ErrorKind::numeric: return numeric;
    }
    return data;
}

}  // namespace

int main(int argc, char** argv)
{
    CLI::App app{"forgescore: anomaly scoring, pseudo-labeling, review and fusion-head training for generated videos"};
    app.require_subcommand(1);
    std::vector<std::unique_ptr<Command>> commands;
    auto add = [&](const std::string& name, const std::string& help, json defaults) -> Command& {
        auto cmd = std::make_unique<Command>();
        cmd->app = app.add_subcommand(name, help);
        cmd->defaults = std::move(defaults);
        cmd->app->add_option("--config", cmd->config_file, "JSON config file (defaults < file < flags)");
        commands.push_back(std::move(cmd));
        return *commands.back();
    };

    std::string out, cohort, scores, labels, split, journal, checkpoint, predictions, perturb, orientation, bind, ui_dir, set;
    std::uint64_t seed = 0;
    std::size_t per_class = 0, workers = 1, border = 0, window = 5, epochs = 0, batch = 0;
    double lr = 0.0;
    int port = 8080;

    auto& synth = add("synth", "Generate a synthetic cohort with planted anomaly labels", {{"out", nullptr}, {"synth", to_json(SynthSpec{})}});
    synth.flag("--out", out, "/out", "Output cohort directory");
    synth.flag("--seed", seed, "/synth/seed", "Generator seed");
    {
        auto* opt = synth.app->add_option("--per-class", per_class, "Videos per class (all four classes)");
        synth.overrides.emplace_back(opt, [&per_class](json& cfg) {
            for (auto k : {"spatial", "appearance", "motion", "real"}) cfg["synth"]["counts"][k] = per_class;
        });
    }
    synth.run = run_synth;

    auto& score = add("score", "Compute spatial/appearance/motion anomaly scores",
                      {{"cohort", nullptr}, {"out", nullptr}, {"workers", 1}, {"border", 0}, {"window", 5}, {"perturb", "none"}});
    score.flag("--cohort", cohort, "/cohort", "Cohort directory");
    score.flag("--out", out, "/out", "Output directory");
    score.flag("--workers", workers, "/workers", "Scoring threads");
    score.flag("--border", border, "/border", "Pixels cropped from each side of the warping-error mean");
    score.flag("--window", window, "/window", "Consistency window length");
    score.flag("--perturb", perturb, "/perturb", "Frame perturbation before motion scoring: blur:S|resize:R|mixed|none");
    score.run = run_score;

    auto& label = add("label", "Rank scores and assign forgery labels with confidence weights",
                      {{"scores", nullptr}, {"out", nullptr}, {"confidence_orientation", "verbatim"}});
    label.flag("--scores", scores, "/scores", "scores.json from the score command");
    label.flag("--out", out, "/out", "Output directory");
    label.flag("--confidence-orientation", orientation, "/confidence_orientation", "verbatim|inverted");
    label.run = run_label;

    auto& splitc = add("split", "Build the train/val split (optionally applying a review journal)",
                       {{"labels", nullptr}, {"out", nullptr}, {"seed", 0}, {"journal", nullptr}});
    splitc.flag("--labels", labels, "/labels", "labels.json from the label command");
    splitc.flag("--out", out, "/out", "Output directory");
    splitc.flag("--seed", seed, "/seed", "Seed for the real-video validation sample");
    splitc.flag("--journal", journal, "/journal", "Review journal (JSON lines) to apply");
    splitc.run = run_split;

    auto& trainc = add("train", "Train the fusion classifier on a finalized split",
                       {{"cohort", nullptr}, {"labels", nullptr}, {"split", nullptr}, {"out", nullptr}, {"fusion", to_json(FusionConfig{})}});
    trainc.flag("--cohort", cohort, "/cohort", "Cohort directory");
    trainc.flag("--labels", labels, "/labels", "labels.json");
    trainc.flag("--split", split, "/split", "split.json");
    trainc.flag("--out", out, "/out", "Output directory");
    trainc.flag("--seed", seed, "/fusion/seed", "Initialization and shuffle seed");
    trainc.flag("--epochs", epochs, "/fusion/epochs", "Training epochs");
    trainc.flag("--lr", lr, "/fusion/lr", "Learning rate");
    trainc.flag("--batch", batch, "/fusion/batch", "Batch size");
    trainc.run = run_train;

    auto& evalc = add("eval", "Evaluate predictions or a checkpoint (optionally under a perturbation)",
                      {{"predictions", nullptr}, {"checkpoint", nullptr}, {"cohort", nullptr}, {"labels", nullptr}, {"split", nullptr},
                       {"set", "val"}, {"out", nullptr}, {"perturb", "none"}, {"workers", 1}});
    evalc.flag("--predictions", predictions, "/predictions", "Predictions file {\"samples\":[{video_id,label,pred,probs?}]}");
    evalc.flag("--checkpoint", checkpoint, "/checkpoint", "Checkpoint directory from the train command");
    evalc.flag("--cohort", cohort, "/cohort", "Cohort directory");
    evalc.flag("--labels", labels, "/labels", "labels.json");
    evalc.flag("--split", split, "/split", "split.json");
    evalc.flag("--set", set, "/set", "val|train|all");
    evalc.flag("--out", out, "/out", "Output directory");
    evalc.flag("--perturb", perturb, "/perturb", "blur:S|resize:R|mixed|none");
    evalc.flag("--workers", workers, "/workers", "Threads for perturbed scoring");
    evalc.run = run_eval;

    auto& serve = add("serve", "Run the review service until SIGINT",
                      {{"cohort", nullptr}, {"labels", nullptr}, {"out", nullptr}, {"journal", nullptr}, {"bind", "127.0.0.1"},
                       {"port", 8080}, {"ui_dir", nullptr}, {"seed", 0}});
    serve.flag("--cohort", cohort, "/cohort", "Cohort directory");
    serve.flag("--labels", labels, "/labels", "labels.json");
    serve.flag("--out", out, "/out", "Output directory (finalized split.json is written here)");
    serve.flag("--journal", journal, "/journal", "Review journal path (default <out>/review_journal.jsonl)");
    serve.flag("--bind", bind, "/bind", "Bind address");
    serve.flag("--port", port, "/port", "Port (0 picks a free port)");
    serve.flag("--ui-dir", ui_dir, "/ui_dir", "Static UI files served at /");
    serve.flag("--seed", seed, "/seed", "Seed for the real-video validation sample");
    serve.run = run_serve;

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::CallForAllHelp& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        app.exit(e);
        return usage;
    }

    try {
        for (const auto& cmd : commands) {
            if (!cmd->app->parsed()) continue;
            json cfg = cmd->resolve();
            if (cfg.contains("out") && !cfg["out"].is_string()) need_path(cfg, "out");
            cmd->run(cfg);
        }
    } catch (const Error& e) {
        std::cerr << "error: " << e.what() << "\n";
        return exit_code(e);
    } catch (const json::exception& e) {
        std::cerr << "error: invalid configuration value: " << e.what() << "\n";
        return usage;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return data;
    }
    return ok;
}
