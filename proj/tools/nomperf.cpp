// nomperf: generate -> train -> predict -> evaluate -> flag -> plot.
//
// Exit status: 0 success, 1 usage or configuration error, 2 data or numeric
// error.

#include <CLI11.hpp>

#include <cstdio>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "nomperf/csv.hpp"
#include "nomperf/fileio.hpp"
#include "nomperf/model_io.hpp"
#include "nomperf/pipeline.hpp"
#include "nomperf/predict.hpp"
#include "nomperf/report_io.hpp"
#include "nomperf/simgen.hpp"
#include "nomperf/svg.hpp"

using namespace nomperf;

namespace {

constexpr int kExitUsage = 1;
constexpr int kExitData = 2;

ScenarioConfig load_scenario(const std::string& name) {
    if (name == "canonical") return canonical_scenario();
    if (name == "staircase") return staircase_scenario();
    std::istringstream in(read_file(resolve_config(name)));
    return parse_scenario(in);
}

TrainedArtifact load_artifact(const std::string& path) { return load_model(read_file(path)); }

std::string join(const std::vector<std::string>& v) {
    std::string s;
    for (std::size_t i = 0; i < v.size(); ++i) s += (i ? "," : "") + v[i];
    return s;
}

// ---------------------------------------------------------------------------

struct GenerateArgs {
    std::string scenario = "canonical";
    std::string out_dir;
    std::optional<std::uint64_t> seed;
    std::optional<int> runs;
};

int run_generate(const GenerateArgs& a) {
    ScenarioConfig cfg = load_scenario(a.scenario);
    if (a.seed) cfg.seed = *a.seed;
    if (a.runs) {
        cfg.n_runs = *a.runs;
        cfg.check();
    }
    const auto runs = generate_corpus(cfg);

    KvWriter manifest("nomperf corpus manifest", 1);
    manifest.put("scenario_hash", hex_u64(scenario_hash(cfg))).put("seed", cfg.seed).put("n_runs", cfg.n_runs);
    std::vector<std::pair<fs::path, std::string>> files;
    std::vector<std::string> ids;
    for (int i = 0; i < cfg.n_runs; ++i) {
        const auto& r = runs[static_cast<std::size_t>(i)];
        manifest.put(r.run_id + ".seed", hex_u64(run_seed(cfg.seed, i)));
        manifest.put(r.run_id + ".hash", hex_u64(fnv1a64(to_csv(r))));
        files.emplace_back(fs::path(a.out_dir) / (r.run_id + ".csv"), to_csv(r));
        ids.push_back(r.run_id);
    }
    manifest.put("runs", ids);
    const std::string text = manifest.str();
    files.emplace_back(fs::path(a.out_dir) / "manifest.txt", text);
    files.emplace_back(fs::path(a.out_dir) / "scenario.scn", to_text(cfg));
    fs::create_directories(a.out_dir);
    write_files_atomic(files);
    std::cout << "wrote " << cfg.n_runs << " runs to " << a.out_dir << " (manifest " << hex_u64(fnv1a64(text))
              << ")\n";
    return 0;
}

// ---------------------------------------------------------------------------

struct TrainArgs {
    std::string data_dir;
    std::string config;
    std::string out;
    std::string trace_out;
    std::optional<std::uint64_t> seed;
    std::optional<int> hidden;
    std::optional<double> alpha;
    std::optional<int> cycles;
    std::optional<std::string> activation;
    std::optional<std::string> optimizer;
    std::optional<double> bin_width;
    std::optional<std::size_t> stride;
    std::optional<double> learning_rate;
    std::optional<int> batch_size;
    std::vector<std::string> holdout;
    bool display = false;
};

TrainConfig train_config(const TrainArgs& a) {
    TrainConfig cfg;
    fs::path cfg_path;
    if (!a.config.empty()) {
        cfg_path = resolve_config(a.config);
    } else if (const char* dir = std::getenv(kConfigDirEnv); dir && *dir && fs::exists(fs::path(dir) / "train.cfg")) {
        cfg_path = fs::path(dir) / "train.cfg";
    }
    if (!cfg_path.empty()) {
        std::istringstream in(read_file(cfg_path));
        cfg = parse_train_config(in);
    }
    if (a.seed) cfg.seed = *a.seed;
    if (a.hidden) cfg.hidden_units = *a.hidden;
    if (a.alpha) cfg.alpha = *a.alpha;
    if (a.cycles) {
        cfg.scg.max_cycles = *a.cycles;
        cfg.sgd.epochs = *a.cycles;
    }
    if (a.activation) cfg.activation = *parse_activation(*a.activation);
    if (a.optimizer) cfg.optimizer = *parse_optimizer(*a.optimizer);
    if (a.bin_width) cfg.bin_width = *a.bin_width;
    if (a.stride) cfg.stride = *a.stride;
    if (a.learning_rate) cfg.sgd.learning_rate = *a.learning_rate;
    if (a.batch_size) cfg.sgd.batch_size = *a.batch_size;
    if (!a.holdout.empty()) cfg.holdout_run_ids = a.holdout;
    if (a.display) cfg.scg.display = true;
    cfg.check();
    return cfg;
}

int run_train(const TrainArgs& a) {
    TrainConfig cfg = train_config(a);
    const auto runs = load_run_dir(a.data_dir);
    TrainedArtifact art;
    try {
        art = train_pipeline(runs, cfg);
    } catch (const NumericFailure& e) {
        std::cerr << "error: " << e.what() << "\n";
        write_trace_csv(std::cerr, e.trace());
        return kExitData;
    }
    std::vector<std::pair<fs::path, std::string>> files{{a.out, save_model(art)}};
    if (!a.trace_out.empty()) {
        std::ostringstream os;
        write_trace_csv(os, art.trace);
        files.emplace_back(a.trace_out, os.str());
    }
    write_files_atomic(files);
    const auto& last = art.trace.entries.back();
    std::cout << "trained " << art.model.n_in() << "x" << art.model.n_hidden() << "x" << art.model.n_out()
              << " on " << runs.size() - cfg.holdout_run_ids.size() << " runs; final error " << format_double(last.error)
              << (cfg.optimizer == Optimizer::Scg ? " at accepted cycle " : " at epoch ") << last.cycle
              << "; residual mean " << format_double(art.residuals.mean) << " std "
              << format_double(art.residuals.std) << "\n";
    if (!cfg.holdout_run_ids.empty()) std::cout << "holdout: " << join(cfg.holdout_run_ids) << "\n";
    return 0;
}

// ---------------------------------------------------------------------------

struct PredictArgs {
    std::string model;
    std::string profile;
    std::string out;
    std::string util = "forecast";
    std::string run;
    std::optional<double> burn;
    double exponent = 3.0;
    std::optional<double> duration;
};

int run_predict(const PredictArgs& a) {
    const TrainedArtifact art = load_artifact(a.model);
    std::istringstream pin(read_file(a.profile));
    const MissionProfile profile = read_profile_csv(pin, a.duration);
    UtilizationModel util;
    if (a.util == "recorded") {
        if (a.run.empty()) throw ConfigError("--util recorded needs --run");
        util = UtilizationModel::from_run(decimate(load_run_file(a.run), art.stride));
    } else {
        util = UtilizationModel::forecast(a.burn.value_or(-1.0), a.exponent);
    }
    const PredictionTrace tr = predict_run(art, profile, util);
    for (const auto& w : tr.warnings) std::cerr << "warning: " << w << "\n";
    std::ostringstream os;
    os << "t,cmd_speed,predicted_speed,utilization\n";
    for (std::size_t i = 0; i < tr.size(); ++i) {
        os << format_double(tr.t[i]) << ',' << format_double(tr.cmd_speed[i]) << ','
           << format_double(tr.predicted_speed[i]) << ',' << format_double(tr.utilization[i]) << '\n';
    }
    write_file_atomic(a.out, os.str());
    return 0;
}

// ---------------------------------------------------------------------------

struct FlagOpts {
    double k = kDefaultFlagK;
    std::size_t window = kDefaultFlagWindow;
    std::string method = "ann";
};

struct EvaluateArgs {
    std::string model;
    std::string run;
    std::string out;
    std::string flags_out;
    FlagOpts flag;
};

EvalReport evaluate_file(const TrainedArtifact& art, const std::string& run_path, const FlagOpts& f) {
    const RunRecord run = decimate(load_run_file(run_path), art.stride);
    EvalReport rep = evaluate_run(art, run);
    if (rep.size() >= f.window) {
        rep.flags = flag_anomalies(rep, art.residuals, f.k, f.window, f.method);
    } else {
        std::cerr << "note: run shorter than the flag window; no flags computed\n";
    }
    return rep;
}

int run_evaluate(const EvaluateArgs& a) {
    const TrainedArtifact art = load_artifact(a.model);
    const EvalReport rep = evaluate_file(art, a.run, a.flag);
    std::vector<std::pair<fs::path, std::string>> files{{a.out, to_json_text(rep)}};
    if (!a.flags_out.empty()) {
        std::ostringstream os;
        write_flags_csv(os, rep.flags);
        files.emplace_back(a.flags_out, os.str());
    }
    write_files_atomic(files);
    for (const auto& m : rep.methods) {
        std::cout << m.method << ": final accumulated error " << format_double(m.final_accumulated)
                  << ", mean residual " << format_double(m.mean_residual) << "\n";
    }
    std::cout << rep.flags.size() << " flagged interval(s)\n";
    return 0;
}

// ---------------------------------------------------------------------------

struct FlagArgs {
    std::string model;
    std::string report;
    std::string run;
    std::string out;
    FlagOpts flag;
};

int run_flag(const FlagArgs& a) {
    if (a.report.empty() == a.run.empty()) throw ConfigError("give exactly one of --report and --run");
    const TrainedArtifact art = load_artifact(a.model);
    std::vector<FlaggedInterval> flags;
    if (!a.report.empty()) {
        const EvalReport rep = parse_report(read_file(a.report));
        flags = flag_anomalies(rep, art.residuals, a.flag.k, a.flag.window, a.flag.method);
    } else {
        const RunRecord run = decimate(load_run_file(a.run), art.stride);
        flags = flag_anomalies(evaluate_run(art, run), art.residuals, a.flag.k, a.flag.window, a.flag.method);
    }
    std::ostringstream os;
    write_flags_csv(os, flags);
    write_file_atomic(a.out, os.str());
    std::cout << flags.size() << " flagged interval(s)\n";
    for (const auto& f : flags) {
        std::cout << "  [" << f.start_idx << ", " << f.end_idx << "] peak " << format_double(f.peak_residual) << "\n";
    }
    return 0;
}

// ---------------------------------------------------------------------------

struct PlotArgs {
    std::string report;
    std::string out;
};

int run_plot(const PlotArgs& a) {
    EvalReport rep;
    try {
        rep = parse_report(read_file(a.report));
    } catch (const FormatError& e) {
        throw ConfigError(std::string("malformed report: ") + e.what());
    }
    const PlotFiles p = render_report(rep);
    write_files_atomic({{a.out + "_overlay.svg", p.overlay_svg},
                        {a.out + "_overlay.csv", p.overlay_csv},
                        {a.out + "_accumulated.svg", p.accumulated_svg},
                        {a.out + "_accumulated.csv", p.accumulated_csv}});
    return 0;
}

void add_flag_opts(CLI::App* cmd, FlagOpts& f) {
    cmd->add_option("--k", f.k, "threshold multiplier on the training residual std")->check(CLI::PositiveNumber);
    cmd->add_option("--window", f.window, "rolling-mean window in samples")->check(CLI::PositiveNumber);
    cmd->add_option("--method", f.method, "report method to flag");
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Nominal-performance prediction and residual-based anomaly flagging"};
    app.require_subcommand(1);

    GenerateArgs gen;
    auto* g = app.add_subcommand("generate", "simulate a corpus of runs");
    g->add_option("--scenario", gen.scenario, "scenario file, or 'canonical' / 'staircase'");
    g->add_option("--out", gen.out_dir, "output directory")->required();
    g->add_option("--seed", gen.seed, "override the scenario seed");
    g->add_option("--runs", gen.runs, "override the number of runs");

    TrainArgs tr;
    auto* t = app.add_subcommand("train", "train a network on a directory of run CSVs");
    t->add_option("--data", tr.data_dir, "directory of run CSVs")->required();
    t->add_option("--config", tr.config, "training config file");
    t->add_option("--out", tr.out, "model file to write")->required();
    t->add_option("--trace-out", tr.trace_out, "training trace CSV to write");
    t->add_option("--seed", tr.seed);
    t->add_option("--hidden", tr.hidden, "hidden units")->check(CLI::PositiveNumber);
    t->add_option("--alpha", tr.alpha, "weight-decay coefficient")->check(CLI::NonNegativeNumber);
    t->add_option("--cycles", tr.cycles, "SCG cycles (SGD epochs)")->check(CLI::PositiveNumber);
    t->add_option("--activation", tr.activation)->check(CLI::IsMember({"logistic", "tanh"}));
    t->add_option("--optimizer", tr.optimizer)->check(CLI::IsMember({"scg", "sgd"}));
    t->add_option("--bin-width", tr.bin_width, "speed-average baseline bin width")->check(CLI::PositiveNumber);
    t->add_option("--stride", tr.stride, "keep every n-th sample")->check(CLI::PositiveNumber);
    t->add_option("--lr", tr.learning_rate, "SGD learning rate")->check(CLI::PositiveNumber);
    t->add_option("--batch", tr.batch_size, "SGD batch size")->check(CLI::PositiveNumber);
    t->add_option("--holdout", tr.holdout, "run ids to leave out")->delimiter(',');
    t->add_flag("--display", tr.display, "print the error every cycle");

    PredictArgs pr;
    auto* p = app.add_subcommand("predict", "predict speed for a mission profile");
    p->add_option("--model", pr.model)->required();
    p->add_option("--profile", pr.profile, "profile CSV")->required();
    p->add_option("--out", pr.out, "prediction CSV to write")->required();
    p->add_option("--util", pr.util)->check(CLI::IsMember({"recorded", "forecast"}));
    p->add_option("--run", pr.run, "run CSV supplying recorded utilization");
    p->add_option("--burn", pr.burn, "forecast burn coefficient (default: calibrated)")->check(CLI::NonNegativeNumber);
    p->add_option("--exponent", pr.exponent, "forecast speed exponent")->check(CLI::NonNegativeNumber);
    p->add_option("--duration", pr.duration, "profile duration when the file has no end row");

    EvaluateArgs ev;
    auto* e = app.add_subcommand("evaluate", "compare the network and both baselines against a run");
    e->add_option("--model", ev.model)->required();
    e->add_option("--run", ev.run, "run CSV")->required();
    e->add_option("--out", ev.out, "report JSON to write")->required();
    e->add_option("--flags-out", ev.flags_out, "flagged intervals CSV to write");
    add_flag_opts(e, ev.flag);

    FlagArgs fl;
    auto* f = app.add_subcommand("flag", "flag anomalous intervals");
    f->add_option("--model", fl.model)->required();
    f->add_option("--report", fl.report, "report JSON");
    f->add_option("--run", fl.run, "run CSV");
    f->add_option("--out", fl.out, "flagged intervals CSV to write")->required();
    add_flag_opts(f, fl.flag);

    PlotArgs pl;
    auto* pp = app.add_subcommand("plot", "draw a report");
    pp->add_option("--report", pl.report)->required();
    pp->add_option("--out", pl.out, "output prefix; writes _overlay and _accumulated .svg/.csv")->required();

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& err) {
        const int code = app.exit(err);
        return code == 0 ? 0 : kExitUsage;
    }

    try {
        if (*g) return run_generate(gen);
        if (*t) return run_train(tr);
        if (*p) return run_predict(pr);
        if (*e) return run_evaluate(ev);
        if (*f) return run_flag(fl);
        if (*pp) return run_plot(pl);
    } catch (const Error& err) {
        std::cerr << "error: " << err.what() << "\n";
        return err.kind() == Error::Kind::Usage ? kExitUsage : kExitData;
    } catch (const std::exception& err) {
        std::cerr << "error: " << err.what() << "\n";
        return kExitUsage;
    }
    return kExitUsage;
}
