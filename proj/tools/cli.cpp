#include "cli.hpp"

#include <CLI11.hpp>

#include <algorithm>
#include <atomic>
#include <charconv>
#include <chrono>
#include <csignal>
#include <filesystem>
#include <iostream>
#include <thread>

#include "fsnt/detectd.hpp"
#include "fsnt/error.hpp"
#include "fsnt/eval.hpp"
#include "fsnt/features.hpp"
#include "fsnt/model_io.hpp"
#include "fsnt/pipeline.hpp"
#include "fsnt/trafficgen.hpp"

namespace fsnt {

namespace {

using nlohmann::json;

std::atomic<bool> g_signalled{false};

extern "C" void on_signal(int) { g_signalled.store(true); }

struct SplitFlags {
    double train_fraction = 0.6;
    std::uint64_t seed = 42;
    bool no_stratify = false;
    std::size_t k = 24;
    bool fit_on_all = false;
    bool no_standardize = false;
    bool no_dedup = false;

    void attach(CLI::App* cmd) {
        cmd->add_option("--train-fraction", train_fraction, "Share of records used for training")
            ->check(CLI::Range(0.0, 1.0))
            ->capture_default_str();
        cmd->add_option("--seed", seed, "Split and estimator seed")->capture_default_str();
        cmd->add_flag("--no-stratify", no_stratify, "Split without preserving class proportions");
        cmd->add_option("--k", k, "PCA components to keep (0 disables PCA)")->capture_default_str();
        cmd->add_flag("--fit-on-all", fit_on_all, "Fit standardizer and PCA on all records, not just train");
        cmd->add_flag("--no-standardize", no_standardize, "Skip z-score standardization");
        cmd->add_flag("--no-dedup", no_dedup, "Keep duplicate records");
    }

    PipelineOptions options() const {
        PipelineOptions o;
        o.split = {train_fraction, seed, !no_stratify};
        o.pca_components = k;
        o.fit_on_all = fit_on_all;
        o.standardize = !no_standardize;
        o.deduplicate = !no_dedup;
        return o;
    }
};

struct EvalFlags {
    std::size_t repeats = 3;
    std::string auc = "macro";
    bool no_timing = false;
    std::string report_dir;

    void attach(CLI::App* cmd) {
        cmd->add_option("--repeats", repeats, "Timed prediction passes over the test set")
            ->check(CLI::PositiveNumber)
            ->capture_default_str();
        cmd->add_option("--auc", auc, "AUC averaging")->check(CLI::IsMember({"macro", "micro"}))->capture_default_str();
        cmd->add_flag("--no-timing", no_timing, "Omit wall-clock fields from output and reports");
        cmd->add_option("--report-dir", report_dir, "Directory for CSV/JSON report files");
    }

    EvalOptions options() const { return {repeats, auc == "micro" ? AucAverage::Micro : AucAverage::Macro}; }
    ExportOptions export_options() const { return {!no_timing}; }
};

Hyperparameters parse_hyperparameters(const std::vector<std::string>& items) {
    Hyperparameters hp;
    for (const auto& item : items) {
        const auto eq = item.find('=');
        double value = 0.0;
        const char* first = item.data() + (eq == std::string::npos ? 0 : eq + 1);
        const char* last = item.data() + item.size();
        const auto [end, ec] = std::from_chars(first, last, value);
        if (eq == std::string::npos || eq == 0 || ec != std::errc() || end != last) {
            throw Error(ErrorCode::InvalidHyperparameter, "expected key=value, got '" + item + "'");
        }
        hp[item.substr(0, eq)] = value;
    }
    return hp;
}

json counts_json(const std::array<std::size_t, kClassCount>& counts) {
    json j = json::object();
    for (std::size_t c = 0; c < kClassCount; ++c) j[std::string(class_name(static_cast<ClassLabel>(c)))] = counts[c];
    return j;
}

void emit(std::ostream& out, bool as_json, const json& j, const std::string& text) {
    if (as_json) {
        out << j.dump(2) << '\n';
    } else {
        out << text;
    }
    out.flush();
}

std::string fmt_counts(const std::array<std::size_t, kClassCount>& counts) {
    std::string s;
    for (std::size_t c = 0; c < kClassCount; ++c) {
        if (c) s += ", ";
        s += std::string(class_name(static_cast<ClassLabel>(c))) + "=" + std::to_string(counts[c]);
    }
    return s;
}

// ------------------------------------------------------------------ commands

struct GenerateCmd {
    std::string out;
    std::uint64_t seed = 42;
    std::vector<std::size_t> counts{kDefaultClassCounts.begin(), kDefaultClassCounts.end()};

    int run(std::ostream& o, bool as_json) const {
        GeneratorSpec spec;
        spec.seed = seed;
        std::copy(counts.begin(), counts.end(), spec.counts.begin());
        const auto d = generate_dataset(spec);
        write_csv(d, out);
        const auto summary = summarize(d);
        json j{{"command", "generate"},
               {"out", out},
               {"seed", seed},
               {"records", d.size()},
               {"class_counts", counts_json(summary.class_counts)}};
        emit(o, as_json, j,
             "wrote " + std::to_string(d.size()) + " records to " + out + " (" + fmt_counts(summary.class_counts) +
                 ")\n");
        return 0;
    }
};

struct PreprocessCmd {
    std::string in;
    std::string out;
    bool strict = false;
    bool no_dedup = false;
    std::string report_dir;

    int run(std::ostream& o, bool as_json) const {
        const auto raw = load_csv(in, strict ? SchemaMode::Strict : SchemaMode::ProjectToCanonical);
        auto cleaned = drop_invalid(raw);
        std::size_t duplicates = 0;
        Dataset data = std::move(cleaned.data);
        if (!no_dedup) {
            auto unique = dedup(data);
            duplicates = unique.removed;
            data = std::move(unique.data);
        }
        write_csv(data, out);
        const auto summary = summarize(data);
        if (!report_dir.empty()) {
            export_label_counts(summary, report_dir);
            write_correlation_csv(correlation_matrix(data), (std::filesystem::path(report_dir) / "correlation.csv").string());
        }
        json j{{"command", "preprocess"},
               {"in", in},
               {"out", out},
               {"records_in", raw.size()},
               {"records_out", data.size()},
               {"invalid_removed", cleaned.removed},
               {"duplicates_removed", duplicates},
               {"class_counts", counts_json(summary.class_counts)}};
        emit(o, as_json, j,
             "kept " + std::to_string(data.size()) + " of " + std::to_string(raw.size()) + " records (" +
                 std::to_string(cleaned.removed) + " invalid, " + std::to_string(duplicates) +
                 " duplicates removed) -> " + out + "\n");
        return 0;
    }
};

struct SelectFeaturesCmd {
    std::string in;
    std::size_t k = 24;
    std::string ranking_out;
    std::string out;

    int run(std::ostream& o, bool as_json) const {
        const auto raw = load_csv(in, SchemaMode::ProjectToCanonical);
        const auto cleaned = drop_invalid(raw).data;
        const auto standardizer = fit_standardizer(cleaned);
        const auto scaled = apply_standardizer(cleaned, standardizer);
        const auto pca = fit_pca(scaled, k);
        const auto ranking = rank_features_by_loading(pca, cleaned.schema());

        double total = 0.0;
        for (const double v : pca.eigenvalues) total += v;
        for (const double v : pca.residual_eigenvalues) total += v;
        double retained = 0.0;
        for (const double v : pca.eigenvalues) retained += v;

        if (!ranking_out.empty()) {
            std::ofstream f(ranking_out);
            if (!f) throw Error(ErrorCode::IoFailure, "cannot write '" + ranking_out + "'");
            f << "rank,feature,score\n";
            for (std::size_t i = 0; i < ranking.entries.size(); ++i) {
                f << i + 1 << ',' << ranking.entries[i].first << ',' << fixed(ranking.entries[i].second, 6) << '\n';
            }
        }
        if (!out.empty()) write_csv(transform_pca(scaled, pca), out);

        json ranked = json::array();
        std::string text = "retained variance " + fixed(total > 0 ? retained / total : 0.0, 4) + " with k=" +
                           std::to_string(k) + "\n";
        for (std::size_t i = 0; i < ranking.entries.size(); ++i) {
            ranked.push_back({{"feature", ranking.entries[i].first}, {"score", ranking.entries[i].second}});
            text += std::to_string(i + 1) + ". " + ranking.entries[i].first + "  " +
                    fixed(ranking.entries[i].second, 4) + "\n";
        }
        json j{{"command", "select-features"},
               {"k", k},
               {"explained_variance", pca.eigenvalues},
               {"retained_variance_ratio", total > 0 ? retained / total : 0.0},
               {"ranking", std::move(ranked)}};
        emit(o, as_json, j, text);
        return 0;
    }
};

struct TrainCmd {
    std::string in;
    std::string model = "RF";
    std::string out;
    std::vector<std::string> hp;
    SplitFlags split;
    EvalFlags eval;

    int run(std::ostream& o, bool as_json) const {
        EstimatorSpec spec;
        spec.kind = parse_kind(model);
        spec.hyperparameters = parse_hyperparameters(hp);
        spec.seed = split.seed;
        resolve_hyperparameters(spec);  // fail before any I/O

        const auto raw = load_csv(in, SchemaMode::ProjectToCanonical);
        const auto data = prepare_data(raw, split.options());
        const auto result = train_and_evaluate(spec, data, eval.options());
        save_model(result.model, out);
        if (!eval.report_dir.empty()) export_report(result.report, eval.report_dir, eval.export_options());

        auto j = to_json(result.report, eval.export_options());
        j["command"] = "train";
        j["model_path"] = out;
        j["invalid_removed"] = data.invalid_removed;
        j["duplicates_removed"] = data.duplicates_removed;
        std::string text = format_class_table(result.report);
        text += "accuracy " + fixed(result.report.metrics.accuracy, 4) + "  auc " + fixed(result.report.auc(), 4);
        if (!eval.no_timing) text += "  execution " + fixed(result.report.execution_seconds(), 4) + " s";
        text += "\nsaved " + out + "\n";
        emit(o, as_json, j, text);
        return 0;
    }
};

struct EvaluateCmd {
    std::string model_path;
    std::string in;
    EvalFlags eval;

    int run(std::ostream& o, bool as_json) const {
        const auto model = load_model(model_path);
        const auto raw =
            load_csv(in, SchemaMode::ProjectToCanonical, model.preprocessing().input_schema);
        if (!raw.labeled()) throw Error(ErrorCode::NotLabeled, "'" + in + "' has no Label column");
        const auto data = drop_invalid(raw).data;
        const auto report = evaluate(model, data, eval.options());
        if (!eval.report_dir.empty()) export_report(report, eval.report_dir, eval.export_options());
        auto j = to_json(report, eval.export_options());
        j["command"] = "evaluate";
        std::string text = format_class_table(report);
        text += "accuracy " + fixed(report.metrics.accuracy, 4) + "  auc " + fixed(report.auc(), 4) + "\n";
        emit(o, as_json, j, text);
        return 0;
    }
};

struct CompareCmd {
    std::string in;
    std::vector<std::string> models;
    std::string models_dir;
    SplitFlags split;
    EvalFlags eval;

    int run(std::ostream& o, std::ostream& err, bool as_json) const {
        std::vector<EstimatorKind> kinds;
        if (models.empty()) {
            kinds.assign(kAllKinds.begin(), kAllKinds.end());
        } else {
            for (const auto& m : models) kinds.push_back(parse_kind(m));
        }
        const auto raw = load_csv(in, SchemaMode::ProjectToCanonical);
        const auto data = prepare_data(raw, split.options());

        std::vector<EvalReport> reports;
        for (const auto kind : kinds) {
            EstimatorSpec spec;
            spec.kind = kind;
            spec.seed = split.seed;
            const auto t0 = std::chrono::steady_clock::now();
            auto result = train_and_evaluate(spec, data, eval.options());
            if (!as_json) {
                err << kind_name(kind) << ": accuracy " << fixed(result.report.metrics.accuracy, 4) << " ("
                    << fixed(std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count(), 1)
                    << " s)\n";
            }
            if (!models_dir.empty()) {
                std::filesystem::create_directories(models_dir);
                std::string name(kind_name(kind));
                std::transform(name.begin(), name.end(), name.begin(), [](unsigned char c) { return std::tolower(c); });
                save_model(result.model, (std::filesystem::path(models_dir) / (name + ".fsnt")).string());
            }
            reports.push_back(std::move(result.report));
        }
        const auto table = compare_models(std::move(reports));
        if (!eval.report_dir.empty()) {
            export_comparison(table, eval.report_dir, eval.export_options());
            export_label_counts(summarize(raw), eval.report_dir);
        }
        auto j = to_json(table, eval.export_options());
        j["command"] = "compare";
        emit(o, as_json, j, format_comparison(table, eval.export_options()));
        return 0;
    }
};

struct ServeCmd {
    std::string listen = "127.0.0.1:5000";
    std::string model;
    double threshold = 0.5;
    std::string blocklist_file;
    int window_seconds = 60;
    std::string dashboard_dir;
    std::size_t threads = 256;

    int run(std::ostream& o, bool as_json, const CliHooks* hooks) const {
        ServiceConfig cfg;
        parse_listen(listen, cfg);
        cfg.model_path = model;
        cfg.threshold = threshold;
        cfg.blocklist_path = blocklist_file;
        cfg.window_seconds = window_seconds;
        cfg.dashboard_dir = dashboard_dir;
        cfg.worker_threads = threads;
        cfg.validate();

        DetectionService service(cfg);
        HttpServer server(service);
        const int port = server.bind();
        const auto active = service.active();
        json j{{"command", "serve"},
               {"host", cfg.host},
               {"port", port},
               {"model", active ? json(kind_name(active->model->kind())) : json(nullptr)},
               {"threshold", cfg.threshold}};
        emit(o, as_json, j,
             "listening on " + cfg.host + ":" + std::to_string(port) +
                 (active ? " with " + std::string(kind_name(active->model->kind())) + " model" : " without a model") +
                 "\n");

        if (hooks && hooks->serve_started) {
            std::thread runner([&] { server.run(); });
            server.wait_until_ready();
            hooks->serve_started(server, port);
            runner.join();
            return 0;
        }

        g_signalled.store(false);
        std::signal(SIGINT, on_signal);
        std::signal(SIGTERM, on_signal);
        std::atomic<bool> done{false};
        std::thread watcher([&] {
            while (!done.load()) {
                if (g_signalled.load()) {
                    server.stop();
                    return;
                }
                std::this_thread::sleep_for(std::chrono::milliseconds(50));
            }
        });
        server.run();
        done.store(true);
        watcher.join();
        return 0;
    }
};

struct ReplayCmd {
    std::string target = "127.0.0.1:5000";
    std::string in;
    std::uint64_t generate_seed = 7;
    std::vector<std::size_t> counts{250, 250, 250, 250};
    std::size_t limit = 0;
    ReplayOptions options;

    int run(std::ostream& o, bool as_json) const {
        Dataset d;
        if (!in.empty()) {
            d = drop_invalid(load_csv(in, SchemaMode::ProjectToCanonical)).data;
        } else {
            GeneratorSpec spec;
            spec.seed = generate_seed;
            std::copy(counts.begin(), counts.end(), spec.counts.begin());
            d = generate_dataset(spec);
        }
        if (limit > 0 && limit < d.size()) d = stratified_sample(d, limit, options.shuffle_seed);
        auto opts = options;
        opts.target = target;

        ReplayReport report;
        int status = 0;
        try {
            report = replay(d, opts);
        } catch (const ReplayFailure& e) {
            report = e.report();
            o << (as_json ? "" : std::string(e.what()) + "\n");
            status = exit_code_for(ErrorCode::ConnectionFailure);
        }
        if (status == 0 && report.failures > 0) status = exit_code_for(ErrorCode::ConnectionFailure);
        auto j = to_json(report);
        j["command"] = "replay";
        std::string text = "sent " + std::to_string(report.sent) + ", responses " + std::to_string(report.responses) +
                           ", failures " + std::to_string(report.failures) + "\n";
        text += "attack recall " + fixed(report.attack_recall(), 4) + ", benign block rate " +
                fixed(report.benign_block_rate(), 4) + ", class accuracy " + fixed(report.class_accuracy(), 4) + "\n";
        for (std::size_t c = 0; c < kClassCount; ++c) {
            text += "  " + std::string(class_name(static_cast<ClassLabel>(c))) + ": " +
                    std::to_string(report.per_class[c].responses) + " responses, recall " +
                    fixed(report.recall(static_cast<ClassLabel>(c)), 4) + "\n";
        }
        text += "latency ms p50 " + fixed(report.latency.p50_ms, 2) + " p90 " + fixed(report.latency.p90_ms, 2) +
                " p99 " + fixed(report.latency.p99_ms, 2) + "; wall " + fixed(report.wall_seconds, 2) + " s\n";
        emit(o, as_json, j, text);
        return status;
    }
};

}  // namespace

int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err, const CliHooks* hooks) {
    CLI::App app{"Flow-based DDoS detection: data preparation, model training and the detection service", "fsnt"};
    app.require_subcommand(1);
    bool as_json = false;
    app.add_flag("--json", as_json, "Machine-readable output");

    GenerateCmd generate;
    auto* c_generate = app.add_subcommand("generate", "Write a seeded synthetic flow corpus as CSV");
    c_generate->add_option("--out", generate.out, "Output CSV path")->required();
    c_generate->add_option("--seed", generate.seed)->capture_default_str();
    c_generate->add_option("--counts", generate.counts, "Records per class: BENIGN,DNS,NTP,UDP")
        ->delimiter(',')
        ->expected(4);

    PreprocessCmd preprocess;
    auto* c_pre = app.add_subcommand("preprocess", "Drop invalid and duplicate records");
    c_pre->add_option("--in", preprocess.in)->required()->check(CLI::ExistingFile);
    c_pre->add_option("--out", preprocess.out)->required();
    c_pre->add_flag("--strict", preprocess.strict, "Keep every column of the input file");
    c_pre->add_flag("--no-dedup", preprocess.no_dedup);
    c_pre->add_option("--report-dir", preprocess.report_dir, "Write label counts and the correlation matrix here");

    SelectFeaturesCmd select;
    auto* c_sel = app.add_subcommand("select-features", "Fit PCA and rank features by loading");
    c_sel->add_option("--in", select.in)->required()->check(CLI::ExistingFile);
    c_sel->add_option("--k", select.k)->capture_default_str();
    c_sel->add_option("--ranking-out", select.ranking_out, "CSV of ranked features");
    c_sel->add_option("--out", select.out, "CSV of principal-component scores");

    TrainCmd train;
    auto* c_train = app.add_subcommand("train", "Train one classifier and evaluate it on the held-out split");
    c_train->add_option("--in", train.in)->required()->check(CLI::ExistingFile);
    c_train->add_option("--model", train.model, "LR, NB, KNN, DT, RF, ADABOOST, GBT (XGBOOST) or SVM")
        ->capture_default_str();
    c_train->add_option("--out", train.out, "Model file to write")->required();
    c_train->add_option("--hp", train.hp, "Hyperparameter override key=value (repeatable)");
    train.split.attach(c_train);
    train.eval.attach(c_train);

    EvaluateCmd evaluate_cmd;
    auto* c_eval = app.add_subcommand("evaluate", "Evaluate a saved model on a labeled CSV");
    c_eval->add_option("--model", evaluate_cmd.model_path)->required()->check(CLI::ExistingFile);
    c_eval->add_option("--in", evaluate_cmd.in)->required()->check(CLI::ExistingFile);
    evaluate_cmd.eval.attach(c_eval);

    CompareCmd compare;
    auto* c_cmp = app.add_subcommand("compare", "Train and rank several classifiers on one shared split");
    c_cmp->add_option("--in", compare.in)->required()->check(CLI::ExistingFile);
    c_cmp->add_option("--models", compare.models, "Comma-separated subset (default: all eight)")->delimiter(',');
    c_cmp->add_option("--models-dir", compare.models_dir, "Save every trained model here");
    compare.split.attach(c_cmp);
    compare.eval.attach(c_cmp);

    ServeCmd serve;
    auto* c_serve = app.add_subcommand("serve", "Run the detection service");
    c_serve->add_option("--listen", serve.listen, "host:port")->envname("FSNT_LISTEN")->capture_default_str();
    c_serve->add_option("--model", serve.model, "Model file")->envname("FSNT_MODEL");
    c_serve->add_option("--threshold", serve.threshold, "Attack probability needed to block")
        ->envname("FSNT_THRESHOLD")
        ->check(CLI::Range(0.0, 1.0))
        ->capture_default_str();
    c_serve->add_option("--blocklist-file", serve.blocklist_file, "Blocklist persistence file")
        ->envname("FSNT_BLOCKLIST_FILE");
    c_serve->add_option("--window-seconds", serve.window_seconds, "Statistics window")
        ->envname("FSNT_WINDOW_SECONDS")
        ->check(CLI::Range(1, 86400))
        ->capture_default_str();
    c_serve->add_option("--dashboard-dir", serve.dashboard_dir, "Static files served at /")
        ->envname("FSNT_DASHBOARD_DIR");
    c_serve->add_option("--threads", serve.threads, "HTTP worker threads")
        ->envname("FSNT_THREADS")
        ->check(CLI::PositiveNumber)
        ->capture_default_str();

    ReplayCmd replay_cmd;
    auto* c_replay = app.add_subcommand("replay", "Post flow records to a running service and score its decisions");
    c_replay->add_option("--target", replay_cmd.target, "host:port")->envname("FSNT_TARGET")->capture_default_str();
    c_replay->add_option("--in", replay_cmd.in, "Labeled CSV to replay (default: generate)");
    c_replay->add_option("--generate-seed", replay_cmd.generate_seed, "Generator seed when no --in is given")
        ->capture_default_str();
    c_replay->add_option("--counts", replay_cmd.counts, "Generated records per class")->delimiter(',')->expected(4);
    c_replay->add_option("--limit", replay_cmd.limit, "Replay a stratified sample of this many records");
    c_replay->add_option("--rate", replay_cmd.options.rate, "Flows per second")
        ->check(CLI::PositiveNumber)
        ->capture_default_str();
    c_replay->add_option("--shuffle-seed", replay_cmd.options.shuffle_seed)->capture_default_str();
    c_replay->add_option("--in-flight", replay_cmd.options.max_in_flight, "Concurrent requests")
        ->check(CLI::PositiveNumber)
        ->capture_default_str();
    c_replay->add_option("--timeout", replay_cmd.options.timeout_seconds, "Per-request timeout, seconds")
        ->check(CLI::PositiveNumber)
        ->capture_default_str();

    std::vector<const char*> argv;
    argv.push_back("fsnt");
    for (const auto& a : args) argv.push_back(a.c_str());
    try {
        app.parse(static_cast<int>(argv.size()), argv.data());
    } catch (const CLI::ParseError& e) {
        return app.exit(e, out, err);
    }

    try {
        if (c_generate->parsed()) return generate.run(out, as_json);
        if (c_pre->parsed()) return preprocess.run(out, as_json);
        if (c_sel->parsed()) return select.run(out, as_json);
        if (c_train->parsed()) return train.run(out, as_json);
        if (c_eval->parsed()) return evaluate_cmd.run(out, as_json);
        if (c_cmp->parsed()) return compare.run(out, err, as_json);
        if (c_serve->parsed()) return serve.run(out, as_json, hooks);
        if (c_replay->parsed()) return replay_cmd.run(out, as_json);
    } catch (const Error& e) {
        err << "error: " << e.what() << '\n';
        if (as_json) out << json{{"error", e.what()}, {"code", error_code_name(e.code())}}.dump() << '\n';
        return exit_code_for(e.code());
    } catch (const std::exception& e) {
        err << "error: " << e.what() << '\n';
        if (as_json) out << json{{"error", e.what()}}.dump() << '\n';
        return 1;
    }
    return 2;
}

}  // namespace fsnt
