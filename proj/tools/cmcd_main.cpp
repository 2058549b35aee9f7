// cmcd — collision-detection workbench for a planar continuum manipulator.
// Subcommands cover the whole pipeline: simulate, label, build-dataset,
// train, tune, detect, report.
//
// Exit codes: 0 success, 1 usage error, 2 data error, 3 convergence failure.

#include <cstdlib>
#include <filesystem>
#include <iostream>
#include <map>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "cmcd/dataset.hpp"
#include "cmcd/detector.hpp"
#include "cmcd/gbt.hpp"
#include "cmcd/image.hpp"
#include "cmcd/manifest.hpp"
#include "cmcd/plot.hpp"
#include "cmcd/scenario_io.hpp"
#include "cmcd/sim.hpp"
#include "cmcd/tuner.hpp"
#include "cmcd/util.hpp"
#include "cmcd/vision.hpp"

namespace fs = std::filesystem;
using namespace cmcd;

namespace {

// Relative output paths resolve under $CMCD_OUT_ROOT when it is set.
fs::path resolve_out(const std::string& path) {
    fs::path p(path);
    if (p.is_relative()) {
        if (const char* root = std::getenv("CMCD_OUT_ROOT"); root && *root) return fs::path(root) / p;
    }
    return p;
}

void write_artifact(RunManifest& manifest, const fs::path& dir, const std::string& rel,
                    std::string_view content) {
    const fs::path full = dir / rel;
    fs::create_directories(full.parent_path());
    write_file(full.string(), content);
    manifest.add(rel, content);
}

// One manifest per subcommand so pipeline stages sharing a directory do not
// clobber each other's records.
void save_manifest(const RunManifest& m, const fs::path& dir) {
    fs::create_directories(dir);
    write_file((dir / ("manifest-" + m.subcommand + ".json")).string(), m.to_json());
}

// Upstream artifact lookup: missing files name the manifest entry they
// should have come from.
std::string require_artifact(const fs::path& run_dir, const std::string& name,
                             const std::string& producer) {
    const fs::path p = run_dir / name;
    if (!fs::exists(p)) {
        std::string msg = "missing artifact '" + name + "' in " + run_dir.string() +
                          " (expected manifest entry '" + name + "' of manifest-" + producer +
                          ".json; run `cmcd " + producer + "` first)";
        throw std::runtime_error(msg);
    }
    return read_file(p.string());
}

// ---- simulate ----

int cmd_simulate(const std::string& config_path, const std::string& out,
                 std::optional<std::uint64_t> seed_override) {
    auto cfg = sim::parse_scenario_config(read_file(config_path));
    if (seed_override) cfg.base.seed = *seed_override;
    const fs::path out_root = resolve_out(out);

    for (const auto& sc : cfg.expand()) {
        sc.validate();
        const fs::path dir = out_root / sc.id;
        fs::create_directories(dir / "frames");

        RunManifest manifest;
        manifest.subcommand = "simulate";
        manifest.config_path = config_path;
        manifest.seed = sc.seed;
        manifest.out_dir = dir.string();
        manifest.started = now_iso8601();
        save_manifest(manifest, dir);  // incomplete until the run finishes

        std::string sensors = sim::sensor_csv_header(9);
        std::string truth = sim::truth_csv_header();
        std::size_t n_frames = 0;

        sim::ScenarioSinks sinks;
        sinks.on_sensor = [&](const SensorFrame& f) { sensors += sim::sensor_csv_row(f); };
        sinks.on_truth = [&](const ContactTruth& ct) { truth += sim::truth_csv_row(ct); };
        sinks.on_image = [&](double t, const BinaryImage& img) {
            const long long ms = std::llround(t * 1000.0);
            const std::string rel = "frames/frame_" + std::to_string(ms) + ".pgm";
            const std::string bytes = pgm_bytes(img.to_gray());
            write_file((dir / rel).string(), bytes);
            manifest.add(rel, bytes);
            ++n_frames;
        };
        sim::run_scenario(sc, sinks);

        write_artifact(manifest, dir, "scenario.txt", sim::serialize_scenario(sc));
        write_artifact(manifest, dir, "sensors.csv", sensors);
        write_artifact(manifest, dir, "truth.csv", truth);
        manifest.finished = now_iso8601();
        manifest.complete = true;
        save_manifest(manifest, dir);
        std::cout << sc.id << ": " << n_frames << " frames, sensors/truth written to "
                  << dir.string() << "\n";
    }
    return 0;
}

// ---- label ----

int cmd_label(const std::string& frames_dir, const std::string& out_csv, int expected,
              int threshold, int kernel, int connectivity, int retry_kernel, unsigned jobs) {
    if (expected < 1) throw std::invalid_argument("--expected must be >= 1");
    if (connectivity != 4 && connectivity != 8)
        throw std::invalid_argument("--connectivity must be 4 or 8");

    const fs::path dir(frames_dir);
    std::vector<std::pair<long long, fs::path>> frames;
    if (fs::is_directory(dir)) {
        for (const auto& e : fs::directory_iterator(dir)) {
            const std::string name = e.path().filename().string();
            if (name.starts_with("frame_") && name.ends_with(".pgm"))
                frames.emplace_back(parse_int(name.substr(6, name.size() - 10)), e.path());
        }
    }
    if (frames.empty()) throw std::runtime_error("no frame_*.pgm files in " + frames_dir);
    std::sort(frames.begin(), frames.end());

    const auto conn = connectivity == 4 ? vision::Connectivity::Four : vision::Connectivity::Eight;
    struct Result {
        vision::FrameLabel row;
        bool noisy = false;
    };
    std::vector<Result> results(frames.size());

    parallel_for(frames.size(), jobs, [&](std::size_t begin, std::size_t end) {
        for (std::size_t i = begin; i < end; ++i) {
            const auto gray = read_pgm(frames[i].second.string());
            const auto bin = vision::threshold(gray, std::uint8_t(threshold));
            auto map = vision::label_components(vision::open(bin, kernel), conn);
            auto label = vision::collision_label(map, expected);
            if (!label && retry_kernel > kernel) {  // noisy: retry with a larger kernel
                map = vision::label_components(vision::open(bin, retry_kernel), conn);
                label = vision::collision_label(map, expected);
            }
            results[i].row = {double(frames[i].first) / 1000.0, map.component_count,
                              label.value_or(0)};
            results[i].noisy = !label.has_value();
        }
    });

    std::vector<vision::FrameLabel> rows;
    std::size_t dropped = 0;
    for (const auto& r : results) {
        if (r.noisy) ++dropped;  // still noisy after retry: drop the frame
        else rows.push_back(r.row);
    }

    const fs::path out = resolve_out(out_csv);
    fs::create_directories(out.parent_path().empty() ? fs::path(".") : out.parent_path());
    const std::string csv = vision::label_csv(rows);
    write_file(out.string(), csv);

    RunManifest manifest;
    manifest.subcommand = "label";
    manifest.config_path = frames_dir;
    manifest.out_dir = out.parent_path().string();
    manifest.started = manifest.finished = now_iso8601();
    manifest.add(out.filename().string(), csv);
    manifest.complete = true;
    save_manifest(manifest, out.parent_path().empty() ? fs::path(".") : out.parent_path());

    std::cout << "labeled " << rows.size() << " frames";
    if (dropped) std::cout << " (" << dropped << " noisy frames dropped)";
    std::cout << " -> " << out.string() << "\n";
    return 0;
}

// ---- build-dataset ----

int cmd_build_dataset(const std::vector<std::string>& run_dirs, const std::string& out_csv,
                      bool drop_transitions) {
    data::LabeledDataset combined;
    for (const auto& rd : run_dirs) {
        const fs::path dir(rd);
        const auto sensors = sim::parse_sensor_csv(require_artifact(dir, "sensors.csv", "simulate"));
        const auto labels = vision::parse_label_csv(require_artifact(dir, "labels.csv", "label"));

        std::vector<std::pair<double, int>> stream;
        stream.reserve(labels.size());
        for (const auto& l : labels) stream.emplace_back(l.timestamp, l.label);

        data::SyncOptions opt;
        opt.drop_transition_rows = drop_transitions;
        auto part = data::synchronize(sensors, stream, opt);
        part.scenarios.emplace_back(dir.filename().string(), part.rows());
        combined.append(part);
    }
    combined.params["sync"] = "zero-order-hold";
    if (drop_transitions) combined.params["transition_rows"] = "dropped";

    const fs::path out = resolve_out(out_csv);
    if (!out.parent_path().empty()) fs::create_directories(out.parent_path());
    write_file(out.string(), data::dataset_csv(combined));
    std::cout << "dataset: " << combined.rows() << " rows, " << combined.positives()
              << " positive -> " << out.string() << "\n";
    return 0;
}

// ---- train ----

int cmd_train(const std::string& data_csv, const std::string& out_model,
              const std::string& log_csv, const std::string& test_csv,
              const gbt::Hyperparams& hp) {
    const auto ds = data::parse_dataset_csv(read_file(data_csv));
    gbt::TrainLog log;
    const auto model = gbt::train(ds, hp, &log);

    const fs::path out = resolve_out(out_model);
    if (!out.parent_path().empty()) fs::create_directories(out.parent_path());
    const std::string serialized = gbt::serialize_model(model);
    write_file(out.string(), serialized);
    std::cout << "model: " << model.trees.size() << " trees, hash "
              << hash_hex(fnv1a64(serialized)) << " -> " << out.string() << "\n";

    if (!log_csv.empty()) {
        std::vector<double> test_dev;
        if (!test_csv.empty()) {
            const auto test = data::parse_dataset_csv(read_file(test_csv));
            test_dev = gbt::staged_eval(model, test).deviance;
        }
        std::string csv = "iteration,train_deviance,test_deviance\n";
        for (std::size_t m = 0; m < log.train_deviance.size(); ++m) {
            csv += std::to_string(m) + "," + fmt_double(log.train_deviance[m]) + ",";
            csv += m < test_dev.size() ? fmt_double(test_dev[m]) : std::string("nan");
            csv += '\n';
        }
        const fs::path lp = resolve_out(log_csv);
        if (!lp.parent_path().empty()) fs::create_directories(lp.parent_path());
        write_file(lp.string(), csv);
    }
    return 0;
}

// ---- tune ----

int cmd_tune(const std::string& data_csv, const tuner::GridSpec& grid, const std::string& out_csv,
             const std::string& out_table) {
    const auto ds = data::parse_dataset_csv(read_file(data_csv));
    const auto report = tuner::grid_search(ds, grid);

    const fs::path csv_path = resolve_out(out_csv);
    if (!csv_path.parent_path().empty()) fs::create_directories(csv_path.parent_path());
    write_file(csv_path.string(), tuner::report_csv(report));
    const std::string table = tuner::report_table(report);
    if (!out_table.empty()) {
        const fs::path tp = resolve_out(out_table);
        if (!tp.parent_path().empty()) fs::create_directories(tp.parent_path());
        write_file(tp.string(), table);
    }
    std::cout << table;

    for (const auto& c : report.cells)
        if (c.flagged) {
            std::cerr << "configuration lr=" << c.hp.learning_rate << " "
                      << gbt::max_features_name(c.hp.max_features) << " sub=" << c.hp.subsample
                      << " flagged: " << c.flag_reason << "\n";
            return 2;  // exit 0 only if every configuration completed
        }
    return 0;
}

// ---- detect ----

int cmd_detect(const std::string& model_path, const std::string& replay_csv,
               const std::string& live_cfg, const std::string& truth_csv,
               const std::string& host, int port, double threshold, const std::string& log_csv,
               bool pace) {
    detect::StreamConfig cfg;
    cfg.model = gbt::parse_model(read_file(model_path));
    if (!replay_csv.empty()) cfg.replay = sim::parse_sensor_csv(read_file(replay_csv));
    if (!live_cfg.empty()) {
        auto scenarios = sim::parse_scenario_config(read_file(live_cfg)).expand();
        if (scenarios.size() != 1)
            throw std::invalid_argument("--live config must expand to exactly one scenario");
        cfg.live = scenarios.front();
        cfg.rate_hz = cfg.live->sensor_rate_hz;
    }
    if (!truth_csv.empty()) cfg.truth = sim::parse_truth_csv(read_file(truth_csv));
    cfg.host = host;
    cfg.port = port;
    cfg.decision_threshold = threshold;
    cfg.pace_replay = pace;

    const auto stats = detect::run_detector(cfg);
    if (!log_csv.empty()) {
        const fs::path lp = resolve_out(log_csv);
        if (!lp.parent_path().empty()) fs::create_directories(lp.parent_path());
        write_file(lp.string(), stats.log);
    }
    std::cout << "frames " << stats.frames << ", positives " << stats.positives << ", dropped "
              << stats.dropped << ", send_failures " << stats.send_failures << ", p99 latency "
              << stats.p99_latency_ms << " ms, " << (double(stats.frames) / stats.wall_seconds)
              << " frames/s\n";
    return 0;
}

// ---- report ----

struct ParsedDetections {
    std::vector<double> t, p;
    std::vector<int> label;
    std::vector<int> truth;  // empty if absent
};

ParsedDetections parse_detection_log(const std::string& text) {
    ParsedDetections out;
    std::size_t line_no = 0;
    for (auto raw : split(text, '\n')) {
        ++line_no;
        const auto line = trim(raw);
        if (line.empty() || line_no == 1) continue;
        const auto cols = split(line, ',');
        if (cols.size() < 3)
            throw std::runtime_error("detection log line " + std::to_string(line_no));
        out.t.push_back(parse_double(cols[0]));
        out.p.push_back(parse_double(cols[1]));
        out.label.push_back(int(parse_int(cols[2])));
        if (cols.size() > 3) out.truth.push_back(int(parse_int(cols[3])));
    }
    return out;
}

int cmd_report(const std::string& cv_csv, const std::vector<std::string>& train_logs,
               const std::string& detections_csv, const std::string& out_dir) {
    const fs::path dir = resolve_out(out_dir);
    fs::create_directories(dir);
    RunManifest manifest;
    manifest.subcommand = "report";
    manifest.out_dir = dir.string();
    manifest.started = now_iso8601();

    if (!cv_csv.empty()) {
        // re-render the stored per-configuration results as an aligned table
        const std::string text = read_file(cv_csv);
        tuner::CvReport report;
        std::size_t line_no = 0;
        for (auto raw : split(text, '\n')) {
            ++line_no;
            const auto line = trim(raw);
            if (line.empty() || line_no == 1) continue;
            const auto cols = split(line, ',');
            if (cols.size() < 7) throw std::runtime_error("cv report CSV line " + std::to_string(line_no));
            tuner::CvCell cell;
            cell.hp.learning_rate = parse_double(cols[0]);
            cell.hp.max_features = gbt::parse_max_features(cols[1]);
            cell.hp.subsample = parse_double(cols[2]);
            cell.mean_accuracy = parse_double(cols[3]);
            cell.std_deviation = parse_double(cols[4]);
            cell.mean_train_seconds = parse_double(cols[5]);
            cell.flagged = parse_int(cols[6]) != 0;
            if (cols.size() > 7 && !cols[7].empty())
                for (auto f : split(cols[7], ';')) cell.fold_accuracy.push_back(parse_double(f));
            report.cells.push_back(std::move(cell));
        }
        report.chosen = tuner::select_best(report);
        write_artifact(manifest, dir, "cv_table.txt", tuner::report_table(report));
        write_artifact(manifest, dir, "cv_report.csv", text);
    }

    if (!train_logs.empty()) {
        plot::Chart chart;
        chart.title = "test loss vs boosting iterations";
        chart.x_label = "boosting iterations";
        chart.y_label = "deviance";
        std::string merged = "series,iteration,train_deviance,test_deviance\n";
        int si = 0;
        for (const auto& path : train_logs) {
            plot::Series train_s, test_s;
            const std::string name = fs::path(path).stem().string();
            std::size_t line_no = 0;
            const std::string text = read_file(path);
            for (auto raw : split(text, '\n')) {
                ++line_no;
                const auto line = trim(raw);
                if (line.empty() || line_no == 1) continue;
                const auto cols = split(line, ',');
                if (cols.size() < 2) throw std::runtime_error("train log line " + std::to_string(line_no));
                const double it = parse_double(cols[0]);
                train_s.x.push_back(it);
                train_s.y.push_back(parse_double(cols[1]));
                merged += name + "," + std::string(cols[0]) + "," + std::string(cols[1]) + ",";
                if (cols.size() > 2 && cols[2] != "nan" && !cols[2].empty()) {
                    test_s.x.push_back(it);
                    test_s.y.push_back(parse_double(cols[2]));
                    merged += std::string(cols[2]);
                }
                merged += '\n';
            }
            if (!test_s.x.empty()) {
                test_s.name = name + " (test)";
                test_s.color = plot::series_color(si++);
                chart.series.push_back(std::move(test_s));
            } else {
                train_s.name = name + " (train)";
                train_s.color = plot::series_color(si++);
                chart.series.push_back(std::move(train_s));
            }
        }
        write_artifact(manifest, dir, "loss_curves.svg", plot::render_svg(chart));
        write_artifact(manifest, dir, "loss_curves.csv", merged);
    }

    if (!detections_csv.empty()) {
        const auto d = parse_detection_log(read_file(detections_csv));
        plot::Chart chart;
        chart.title = "collision probability";
        chart.x_label = "time (s)";
        chart.y_label = "p(collision)";
        plot::Series prob;
        prob.name = "probability";
        prob.x = d.t;
        prob.y = d.p;
        chart.series.push_back(std::move(prob));
        if (!d.truth.empty()) {  // shade ground-truth contact episodes
            for (std::size_t i = 0; i < d.truth.size();) {
                if (d.truth[i]) {
                    std::size_t j = i;
                    while (j < d.truth.size() && d.truth[j]) ++j;
                    chart.bands.push_back({d.t[i], d.t[j - 1]});
                    i = j;
                } else {
                    ++i;
                }
            }
        }
        write_artifact(manifest, dir, "detection_timeline.svg", plot::render_svg(chart));
        write_artifact(manifest, dir, "detection_timeline.csv", read_file(detections_csv));
    }

    manifest.finished = now_iso8601();
    manifest.complete = true;
    save_manifest(manifest, dir);
    std::cout << "report written to " << dir.string() << "\n";
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"collision-detection workbench for a planar continuum manipulator"};
    app.require_subcommand(1);

    // simulate
    std::string sim_config, sim_out = "runs";
    std::uint64_t sim_seed = 0;
    bool sim_seed_set = false;
    auto* sim_cmd = app.add_subcommand("simulate", "run scenarios, write sensors/frames/truth");
    sim_cmd->add_option("--config", sim_config, "scenario config file")->required();
    sim_cmd->add_option("--out", sim_out, "output root directory");
    sim_cmd->add_option("--seed", sim_seed, "override base seed")->each([&](const std::string&) {
        sim_seed_set = true;
    });

    // label
    std::string lab_frames, lab_out = "labels.csv";
    int lab_expected = 2, lab_threshold = 128, lab_kernel = 3, lab_conn = 8, lab_retry = 5;
    unsigned lab_jobs = 1;
    auto* lab_cmd = app.add_subcommand("label", "auto-label PGM frames via connected components");
    lab_cmd->add_option("--frames", lab_frames, "directory of frame_<ms>.pgm files")->required();
    lab_cmd->add_option("--out", lab_out, "output label CSV");
    lab_cmd->add_option("--expected", lab_expected, "expected separate components (1 + obstacles)")
        ->required();
    lab_cmd->add_option("--threshold", lab_threshold, "binarization threshold (0..255)");
    lab_cmd->add_option("--kernel", lab_kernel, "opening kernel size (odd)");
    lab_cmd->add_option("--connectivity", lab_conn, "4 or 8");
    lab_cmd->add_option("--retry-kernel", lab_retry, "larger kernel for noisy frames");
    lab_cmd->add_option("--jobs", lab_jobs, "labeling worker threads");

    // build-dataset
    std::vector<std::string> bd_runs;
    std::string bd_out = "dataset.csv";
    bool bd_drop = false;
    auto* bd_cmd = app.add_subcommand("build-dataset", "synchronize sensors with labels");
    bd_cmd->add_option("--run", bd_runs, "run directory with sensors.csv and labels.csv")
        ->required()
        ->expected(-1);
    bd_cmd->add_option("--out", bd_out, "output dataset CSV");
    bd_cmd->add_flag("--drop-transition-rows", bd_drop,
                     "drop rows within one camera period of a label transition");

    // shared hyperparameter options
    gbt::Hyperparams hp;
    std::string hp_max_features = "all";
    auto add_hp = [&](CLI::App* cmd) {
        cmd->add_option("--n-estimators", hp.n_estimators, "boosting iterations");
        cmd->add_option("--learning-rate", hp.learning_rate, "shrinkage in (0,1]");
        cmd->add_option("--depth", hp.max_depth, "max tree depth");
        cmd->add_option("--subsample", hp.subsample, "row subsample fraction in (0,1]");
        cmd->add_option("--max-features", hp_max_features, "all|log2");
        cmd->add_option("--seed", hp.seed, "training seed");
        cmd->add_option("--min-samples-leaf", hp.min_samples_leaf, "min rows per leaf");
    };

    // train
    std::string tr_data, tr_out = "model.txt", tr_log, tr_test;
    auto* tr_cmd = app.add_subcommand("train", "train a gradient-boosted tree classifier");
    tr_cmd->add_option("--data", tr_data, "training dataset CSV")->required();
    tr_cmd->add_option("--out", tr_out, "output model file");
    tr_cmd->add_option("--log", tr_log, "training log CSV (iteration,train_deviance,test_deviance)");
    tr_cmd->add_option("--test", tr_test, "held-out dataset for staged test deviance");
    add_hp(tr_cmd);

    // tune
    std::string tn_data, tn_out_csv = "cv_report.csv", tn_out_table = "cv_report.txt";
    std::vector<double> tn_lrs{0.2, 0.6, 1.0}, tn_subs{1.0, 0.2};
    std::vector<std::string> tn_mf{"all", "log2"};
    tuner::GridSpec grid;
    auto* tn_cmd = app.add_subcommand("tune", "k-fold cross-validation grid search");
    tn_cmd->add_option("--data", tn_data, "dataset CSV")->required();
    tn_cmd->add_option("--out-csv", tn_out_csv, "report CSV path");
    tn_cmd->add_option("--out-table", tn_out_table, "aligned text table path");
    tn_cmd->add_option("--lrs", tn_lrs, "learning rates")->expected(-1);
    tn_cmd->add_option("--max-features", tn_mf, "feature modes: all|log2")->expected(-1);
    tn_cmd->add_option("--subsamples", tn_subs, "subsample fractions")->expected(-1);
    tn_cmd->add_option("--n-estimators", grid.n_estimators, "boosting iterations");
    tn_cmd->add_option("--depth", grid.max_depth, "max tree depth");
    tn_cmd->add_option("--k", grid.k, "number of folds");
    tn_cmd->add_option("--seed", grid.seed, "fold shuffle + training seed");
    tn_cmd->add_option("--workers", grid.workers, "parallel configurations");

    // detect
    std::string dt_model, dt_replay, dt_live, dt_truth, dt_host, dt_log = "detections.csv";
    int dt_port = 0;
    double dt_threshold = 0.5;
    bool dt_pace = false;
    auto* dt_cmd = app.add_subcommand("detect", "stream collision probabilities over UDP");
    dt_cmd->add_option("--model", dt_model, "trained model file")->required();
    dt_cmd->add_option("--replay", dt_replay, "sensor CSV to replay");
    dt_cmd->add_option("--live", dt_live, "scenario config for live simulation");
    dt_cmd->add_option("--truth", dt_truth, "truth CSV joined into the log");
    dt_cmd->add_option("--host", dt_host, "UDP sink host");
    dt_cmd->add_option("--port", dt_port, "UDP sink port");
    dt_cmd->add_option("--threshold", dt_threshold, "decision threshold in [0,1]");
    dt_cmd->add_option("--log", dt_log, "detection log CSV");
    dt_cmd->add_flag("--pace", dt_pace, "pace replay to real time");

    // report
    std::string rp_cv, rp_detections, rp_out = "reports";
    std::vector<std::string> rp_train_logs;
    auto* rp_cmd = app.add_subcommand("report", "render CV tables, loss curves, timelines");
    rp_cmd->add_option("--cv", rp_cv, "cv report CSV");
    rp_cmd->add_option("--train-log", rp_train_logs, "training log CSV(s)")->expected(-1);
    rp_cmd->add_option("--detections", rp_detections, "detection log CSV");
    rp_cmd->add_option("--out", rp_out, "output directory");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        app.exit(e);
        return e.get_exit_code() == 0 ? 0 : 1;
    }

    try {
        if (sim_cmd->parsed())
            return cmd_simulate(sim_config, sim_out,
                                sim_seed_set ? std::optional<std::uint64_t>(sim_seed) : std::nullopt);
        if (lab_cmd->parsed())
            return cmd_label(lab_frames, lab_out, lab_expected, lab_threshold, lab_kernel, lab_conn,
                             lab_retry, lab_jobs);
        if (bd_cmd->parsed()) return cmd_build_dataset(bd_runs, bd_out, bd_drop);
        if (tr_cmd->parsed()) {
            hp.max_features = gbt::parse_max_features(hp_max_features);
            return cmd_train(tr_data, tr_out, tr_log, tr_test, hp);
        }
        if (tn_cmd->parsed()) {
            grid.learning_rates = tn_lrs;
            grid.subsamples = tn_subs;
            grid.max_features.clear();
            for (const auto& s : tn_mf) grid.max_features.push_back(gbt::parse_max_features(s));
            return cmd_tune(tn_data, grid, tn_out_csv, tn_out_table);
        }
        if (dt_cmd->parsed())
            return cmd_detect(dt_model, dt_replay, dt_live, dt_truth, dt_host, dt_port,
                              dt_threshold, dt_log, dt_pace);
        if (rp_cmd->parsed()) return cmd_report(rp_cv, rp_train_logs, rp_detections, rp_out);
    } catch (const sim::SolveError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 3;
    } catch (const std::invalid_argument& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    }
    return 1;
}
