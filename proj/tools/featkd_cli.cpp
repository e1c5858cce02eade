// Command-line front end: theory verification, distillation runs, merge
// checks, and feature diagnostics, with reproducible file outputs. Every
// command writes a manifest.json echoing its full configuration; `replay`
// re-runs a manifest and must reproduce all outputs byte for byte.

#include <algorithm>
#include <charconv>
#include <chrono>
#include <cstdint>
#include <cstdio>
#include <filesystem>
#include <numbers>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"

#include "featkd/featkd.hpp"

namespace fs = std::filesystem;
using featkd::Json;

namespace {

std::string fmt_double(double v) {
    char buf[32];
    const auto res = std::to_chars(buf, buf + sizeof(buf), v);
    return std::string(buf, res.ptr);
}

std::vector<std::size_t> parse_size_list(const std::string& csv) {
    std::vector<std::size_t> out;
    std::stringstream ss(csv);
    std::string cell;
    while (std::getline(ss, cell, ',')) {
        if (cell.empty()) {
            throw std::invalid_argument("empty entry in list: " + csv);
        }
        out.push_back(std::stoull(cell));
    }
    if (out.empty()) {
        throw std::invalid_argument("empty list");
    }
    return out;
}

std::string join_size_list(const std::vector<std::size_t>& v) {
    std::string out;
    for (std::size_t i = 0; i < v.size(); ++i) {
        if (i) out += ',';
        out += std::to_string(v[i]);
    }
    return out;
}

struct CurveRow {
    std::size_t dim = 0;
    std::size_t n_hash = 0;
    double epsilon = 0.0;
    double cdf_quadrature = 0.0;
    std::optional<double> cdf_mc;
    std::optional<double> mc_stderr;
};

std::string curve_csv(const std::vector<CurveRow>& rows) {
    std::string out = "D,N,epsilon_rad,cdf_quadrature,cdf_mc,mc_stderr\n";
    for (const CurveRow& r : rows) {
        out += std::to_string(r.dim);
        out += ',';
        out += std::to_string(r.n_hash);
        out += ',';
        out += fmt_double(r.epsilon);
        out += ',';
        out += fmt_double(r.cdf_quadrature);
        out += ',';
        if (r.cdf_mc) out += fmt_double(*r.cdf_mc);
        out += ',';
        if (r.mc_stderr) out += fmt_double(*r.mc_stderr);
        out += '\n';
    }
    return out;
}

// ---------------------------------------------------------------------------
// theory

struct TheoryConfig {
    std::uint64_t seed = 1;
    int claim = 0;  // 0 means curve mode
    bool curve = false;
    std::size_t dim = 0;  // 0 means per-mode default
    std::string n_hash_list = "";
    double theta = std::numbers::pi / 2;
    std::size_t samples = 0;  // 0 means per-mode default
    std::size_t points = 256;
    std::size_t chunks = 1;
    double tol = 0.02;

    Json to_json() const {
        return Json{{"seed", seed},     {"claim", claim},     {"curve", curve},
                    {"dim", dim},       {"n_hash", n_hash_list}, {"theta", theta},
                    {"samples", samples}, {"points", points},  {"chunks", chunks},
                    {"tol", tol}};
    }
    static TheoryConfig from_json(const Json& j) {
        TheoryConfig c;
        c.seed = j.at("seed").get<std::uint64_t>();
        c.claim = j.at("claim").get<int>();
        c.curve = j.at("curve").get<bool>();
        c.dim = j.at("dim").get<std::size_t>();
        c.n_hash_list = j.at("n_hash").get<std::string>();
        c.theta = j.at("theta").get<double>();
        c.samples = j.at("samples").get<std::size_t>();
        c.points = j.at("points").get<std::size_t>();
        c.chunks = j.at("chunks").get<std::size_t>();
        c.tol = j.at("tol").get<double>();
        return c;
    }
};

struct CommandResult {
    std::vector<std::string> outputs;
    bool pass = true;
};

CommandResult run_theory(const TheoryConfig& cfg, const fs::path& out_dir) {
    using namespace featkd;
    fs::create_directories(out_dir);
    CommandResult result;
    Json report;

    if (cfg.curve) {
        const std::size_t dim = cfg.dim ? cfg.dim : 2048;
        const std::vector<std::size_t> n_list =
            parse_size_list(cfg.n_hash_list.empty() ? "0,2048,8192" : cfg.n_hash_list);
        std::vector<CurveRow> rows;
        Json crossings = Json::array();
        for (std::size_t n : n_list) {
            const auto curve = conditional_angle_curve(dim, n, cfg.points);
            for (const CurvePoint& pt : curve) {
                rows.push_back(CurveRow{dim, n, pt.epsilon, pt.probability, {}, {}});
            }
            crossings.push_back(Json{{"n_hash", n}, {"half_crossing_rad",
                                                     curve_crossing(curve, 0.5)}});
        }
        write_file_atomic(out_dir / "curve.csv", curve_csv(rows));
        result.outputs.push_back("curve.csv");
        report = Json{{"mode", "curve"}, {"dim", dim}, {"n_hash", n_list},
                      {"points", cfg.points}, {"half_crossings", crossings}};
    } else {
        RngStream rng(cfg.seed);
        switch (cfg.claim) {
            case 1: {
                const std::size_t dim = cfg.dim ? cfg.dim : 16;
                const std::size_t n_hash =
                    cfg.n_hash_list.empty() ? 64 : parse_size_list(cfg.n_hash_list).front();
                const std::size_t trials = cfg.samples ? cfg.samples : 1000;
                const ClaimReport r = verify_claim1(dim, n_hash, trials, rng);
                result.pass = r.pass;
                report = Json{{"claim", 1},
                              {"pass", r.pass},
                              {"trials", r.trials},
                              {"violations", r.violations},
                              {"worst_deviation", r.worst_deviation},
                              {"dim", dim},
                              {"n_hash", n_hash}};
                break;
            }
            case 2: {
                const std::size_t dim = cfg.dim ? cfg.dim : 16;
                const std::size_t n_hash =
                    cfg.n_hash_list.empty() ? 64 : parse_size_list(cfg.n_hash_list).front();
                const std::size_t trials = cfg.samples ? cfg.samples : 1000;
                const ClaimReport r = verify_claim2(dim, n_hash, trials, rng);
                result.pass = r.pass;
                report = Json{{"claim", 2},
                              {"pass", r.pass},
                              {"trials", r.trials},
                              {"violations", r.violations},
                              {"worst_deviation", r.worst_deviation},
                              {"dim", dim},
                              {"n_hash", n_hash}};
                break;
            }
            case 3: {
                const std::size_t dim = cfg.dim ? cfg.dim : 8;
                const std::size_t samples = cfg.samples ? cfg.samples : 100000;
                const McEstimate est =
                    mc_prob_loss_small(dim, cfg.theta, samples, rng, cfg.chunks);
                const double target = prob_loss_small_given_angle(cfg.theta);
                const double sigmas =
                    est.std_error > 0.0 ? std::fabs(est.value - target) / est.std_error : 0.0;
                result.pass = sigmas <= 3.0;
                report = Json{{"claim", 3},          {"pass", result.pass},
                              {"dim", dim},          {"theta", cfg.theta},
                              {"samples", samples},  {"estimate", est.value},
                              {"std_error", est.std_error}, {"target", target},
                              {"deviation_sigmas", sigmas}};
                break;
            }
            case 4: {
                const std::size_t dim = cfg.dim ? cfg.dim : 8;
                const std::size_t n_hash =
                    cfg.n_hash_list.empty() ? 4 : parse_size_list(cfg.n_hash_list).front();
                const std::size_t samples = cfg.samples ? cfg.samples : 200000;
                const ConditionalAngleMc mc =
                    mc_conditional_angle(dim, n_hash, samples, rng, cfg.points, cfg.chunks);
                std::vector<CurveRow> rows;
                double sup_norm = 0.0;
                const double n_acc = static_cast<double>(mc.acceptance.accepted);
                for (const CurvePoint& pt : mc.cdf) {
                    const double quad = conditional_angle_cdf(dim, n_hash, pt.epsilon);
                    sup_norm = std::max(sup_norm, std::fabs(quad - pt.probability));
                    const double se =
                        std::sqrt(pt.probability * (1.0 - pt.probability) / n_acc);
                    rows.push_back(CurveRow{dim, n_hash, pt.epsilon, quad, pt.probability, se});
                }
                write_file_atomic(out_dir / "curve.csv", curve_csv(rows));
                result.outputs.push_back("curve.csv");
                result.pass = sup_norm < cfg.tol;
                report = Json{{"claim", 4},
                              {"pass", result.pass},
                              {"dim", dim},
                              {"n_hash", n_hash},
                              {"samples", samples},
                              {"accepted", mc.acceptance.accepted},
                              {"acceptance_rate", mc.acceptance.value},
                              {"acceptance_std_error", mc.acceptance.std_error},
                              {"sup_norm", sup_norm},
                              {"tol", cfg.tol}};
                break;
            }
            default:
                throw std::invalid_argument("theory: requested claim must be 1, 2, 3, or 4");
        }
    }
    write_file_atomic(out_dir / "report.json", report.dump(2) + "\n");
    result.outputs.push_back("report.json");
    return result;
}

// ---------------------------------------------------------------------------
// distill

struct DistillCliConfig {
    std::uint64_t seed = 1;
    std::string mode = "lshl2";
    double beta = 6.0;
    std::size_t n_hash = 2048;
    double std_hash = 1.0;
    std::string bias_init = "median";
    double lr = 0.03;
    std::size_t epochs = 80;
    std::size_t batch_size = 32;
    std::size_t avg_last_k = 10;
    bool embed = true;
    bool filter = true;
    bool two_stage = false;
    std::string stage1 = "lshl2";
    std::string stage2 = "l2";
    std::size_t classes = 10;
    std::size_t dim = 16;
    std::size_t samples_per_class = 40;
    double spread = 1.1;
    std::string teacher_hidden = "32,16";
    std::string student_hidden = "12,8";
    double teacher_lr = 0.1;
    std::size_t teacher_epochs = 80;

    Json to_json() const {
        return Json{{"seed", seed},
                    {"mode", mode},
                    {"beta", beta},
                    {"n_hash", n_hash},
                    {"std_hash", std_hash},
                    {"bias_init", bias_init},
                    {"lr", lr},
                    {"epochs", epochs},
                    {"batch_size", batch_size},
                    {"avg_last_k", avg_last_k},
                    {"embed", embed},
                    {"filter", filter},
                    {"two_stage", two_stage},
                    {"stage1", stage1},
                    {"stage2", stage2},
                    {"classes", classes},
                    {"dim", dim},
                    {"samples_per_class", samples_per_class},
                    {"spread", spread},
                    {"teacher_hidden", teacher_hidden},
                    {"student_hidden", student_hidden},
                    {"teacher_lr", teacher_lr},
                    {"teacher_epochs", teacher_epochs}};
    }
    static DistillCliConfig from_json(const Json& j) {
        DistillCliConfig c;
        c.seed = j.at("seed").get<std::uint64_t>();
        c.mode = j.at("mode").get<std::string>();
        c.beta = j.at("beta").get<double>();
        c.n_hash = j.at("n_hash").get<std::size_t>();
        c.std_hash = j.at("std_hash").get<double>();
        c.bias_init = j.at("bias_init").get<std::string>();
        c.lr = j.at("lr").get<double>();
        c.epochs = j.at("epochs").get<std::size_t>();
        c.batch_size = j.at("batch_size").get<std::size_t>();
        c.avg_last_k = j.at("avg_last_k").get<std::size_t>();
        c.embed = j.at("embed").get<bool>();
        c.filter = j.at("filter").get<bool>();
        c.two_stage = j.at("two_stage").get<bool>();
        c.stage1 = j.at("stage1").get<std::string>();
        c.stage2 = j.at("stage2").get<std::string>();
        c.classes = j.at("classes").get<std::size_t>();
        c.dim = j.at("dim").get<std::size_t>();
        c.samples_per_class = j.at("samples_per_class").get<std::size_t>();
        c.spread = j.at("spread").get<double>();
        c.teacher_hidden = j.at("teacher_hidden").get<std::string>();
        c.student_hidden = j.at("student_hidden").get<std::string>();
        c.teacher_lr = j.at("teacher_lr").get<double>();
        c.teacher_epochs = j.at("teacher_epochs").get<std::size_t>();
        return c;
    }
};

Json log_entry_json(const featkd::EpochLogEntry& e) {
    Json j{{"stage", e.stage}, {"epoch", e.epoch}, {"loss", featkd::to_json(e.loss, e.epoch)}};
    if (e.train_stats) j["train"] = featkd::to_json(*e.train_stats);
    if (e.test_stats) j["test"] = featkd::to_json(*e.test_stats);
    return j;
}

CommandResult run_distill(const DistillCliConfig& cli, const fs::path& out_dir) {
    using namespace featkd;
    fs::create_directories(out_dir);

    RngStream root(cli.seed);
    RngStream data_rng = root.substream(stream_tag::kData);
    auto [train, test] =
        generate_blobs(cli.classes, cli.dim, cli.samples_per_class, cli.spread, data_rng);

    RngStream teacher_init = root.substream(stream_tag::kTeacherInit);
    Mlp teacher = make_mlp(cli.dim, parse_size_list(cli.teacher_hidden), 0, cli.classes,
                           teacher_init);
    DistillConfig teacher_cfg;
    teacher_cfg.loss_mode = LossMode::CE;
    teacher_cfg.lr = cli.teacher_lr;
    teacher_cfg.epochs = cli.teacher_epochs;
    teacher_cfg.batch_size = cli.batch_size;
    teacher_cfg.avg_last_k = std::min<std::size_t>(10, cli.teacher_epochs);
    teacher_cfg.seed = root.substream(stream_tag::kTeacherInit).seed();
    teacher = train_vanilla(teacher, train, teacher_cfg);

    const std::vector<std::size_t> student_widths = parse_size_list(cli.student_hidden);
    RngStream student_init = root.substream(stream_tag::kStudentInit);
    const Mlp student0 = make_mlp(cli.dim, student_widths,
                                  cli.embed ? teacher.feature_dim() : 0, cli.classes,
                                  student_init);

    DistillConfig cfg;
    cfg.beta = cli.beta;
    cfg.n_hash = cli.n_hash;
    cfg.std_hash = cli.std_hash;
    cfg.bias_init = parse_bias_init(cli.bias_init);
    cfg.lr = cli.lr;
    cfg.epochs = cli.epochs;
    cfg.batch_size = cli.batch_size;
    cfg.filter_teacher_correct = cli.filter;
    cfg.avg_last_k = cli.avg_last_k;
    cfg.loss_mode = parse_loss_mode(cli.mode);
    cfg.use_embedding = cli.embed;
    cfg.seed = cli.seed;

    TrainLog log;
    Mlp final_student;
    AngleStats train_stats;
    AngleStats test_stats;
    if (cli.two_stage) {
        final_student = two_stage_finetune(teacher, student0, train, test, cfg,
                                           parse_loss_mode(cli.stage1),
                                           parse_loss_mode(cli.stage2), &log);
        train_stats = feature_stats(teacher, final_student, train);
        test_stats = feature_stats(teacher, final_student, test);
    } else {
        DistillResult r = distill(teacher, student0, train, test, cfg, &log);
        final_student = std::move(r.student);
        train_stats = r.train_stats;
        test_stats = r.test_stats;
    }

    std::string log_text;
    for (const EpochLogEntry& e : log) {
        log_text += log_entry_json(e).dump() + "\n";
    }
    write_file_atomic(out_dir / "log.jsonl", log_text);

    const AngleStats teacher_train = feature_stats(teacher, teacher, train);
    const AngleStats teacher_test = feature_stats(teacher, teacher, test);
    const double std_t = classifier_weight_std(teacher);
    Json report{{"config", cli.to_json()},
                {"train", to_json(train_stats)},
                {"test", to_json(test_stats)},
                {"accuracy", test_stats.accuracy},
                {"teacher_accuracy_train", teacher_train.accuracy},
                {"teacher_accuracy_test", teacher_test.accuracy},
                {"teacher_classifier_std", std_t},
                {"student_classifier_std", classifier_weight_std(final_student)},
                {"expected_teacher_weight_norm",
                 expected_weight_norm(std_t, teacher.feature_dim())}};
    write_file_atomic(out_dir / "report.json", report.dump(2) + "\n");
    write_file_atomic(out_dir / "teacher.json", to_json(teacher, teacher_cfg.seed).dump() + "\n");
    write_file_atomic(out_dir / "student.json", to_json(final_student, cli.seed).dump() + "\n");

    CommandResult result;
    result.outputs = {"log.jsonl", "report.json", "teacher.json", "student.json"};
    return result;
}

// ---------------------------------------------------------------------------
// merge-check

struct MergeCheckConfig {
    std::string checkpoint;
    std::uint64_t seed = 1;
    std::size_t probes = 1000;
    double tol = 1e-10;

    Json to_json() const {
        return Json{{"checkpoint", checkpoint}, {"seed", seed}, {"probes", probes}, {"tol", tol}};
    }
    static MergeCheckConfig from_json(const Json& j) {
        MergeCheckConfig c;
        c.checkpoint = j.at("checkpoint").get<std::string>();
        c.seed = j.at("seed").get<std::uint64_t>();
        c.probes = j.at("probes").get<std::size_t>();
        c.tol = j.at("tol").get<double>();
        return c;
    }
};

CommandResult run_merge_check(const MergeCheckConfig& cfg, const fs::path& out_dir) {
    using namespace featkd;
    fs::create_directories(out_dir);
    const Mlp model = mlp_from_json(load_json_file(cfg.checkpoint));
    if (!model.embedding) {
        throw std::invalid_argument("merge-check: checkpoint has no embedding layer to merge");
    }
    Mlp merged = model;
    merged.classifier = merge_embedding(*model.embedding, model.classifier);
    merged.embedding.reset();

    RngStream rng = RngStream(cfg.seed).substream(stream_tag::kProbe);
    double max_dev = 0.0;
    for (std::size_t p = 0; p < cfg.probes; ++p) {
        const Vector x = gaussian_vector(model.input_dim(), 0.0, 1.0, rng);
        const Vector a = forward(model, x).logits;
        const Vector b = forward(merged, x).logits;
        for (std::size_t i = 0; i < a.size(); ++i) {
            max_dev = std::max(max_dev, std::fabs(a[i] - b[i]));
        }
    }
    write_file_atomic(out_dir / "merged.json", to_json(merged, cfg.seed).dump() + "\n");
    const bool pass = max_dev < cfg.tol;
    Json report{{"pass", pass},
                {"max_deviation", max_dev},
                {"tol", cfg.tol},
                {"probes", cfg.probes},
                {"merged_in_dim", merged.classifier.in_dim()},
                {"merged_out_dim", merged.classifier.out_dim()}};
    write_file_atomic(out_dir / "report.json", report.dump(2) + "\n");
    CommandResult result;
    result.outputs = {"merged.json", "report.json"};
    result.pass = pass;
    return result;
}

// ---------------------------------------------------------------------------
// stats

struct StatsConfig {
    std::string teacher;
    std::string student;
    std::string data;  // CSV path; empty means synthesize blobs
    std::uint64_t seed = 1;
    std::size_t classes = 10;
    std::size_t dim = 16;
    std::size_t samples_per_class = 40;
    double spread = 1.1;

    Json to_json() const {
        return Json{{"teacher", teacher},
                    {"student", student},
                    {"data", data},
                    {"seed", seed},
                    {"classes", classes},
                    {"dim", dim},
                    {"samples_per_class", samples_per_class},
                    {"spread", spread}};
    }
    static StatsConfig from_json(const Json& j) {
        StatsConfig c;
        c.teacher = j.at("teacher").get<std::string>();
        c.student = j.at("student").get<std::string>();
        c.data = j.at("data").get<std::string>();
        c.seed = j.at("seed").get<std::uint64_t>();
        c.classes = j.at("classes").get<std::size_t>();
        c.dim = j.at("dim").get<std::size_t>();
        c.samples_per_class = j.at("samples_per_class").get<std::size_t>();
        c.spread = j.at("spread").get<double>();
        return c;
    }
};

CommandResult run_stats(const StatsConfig& cfg, const fs::path& out_dir) {
    using namespace featkd;
    fs::create_directories(out_dir);
    const Mlp teacher = mlp_from_json(load_json_file(cfg.teacher));
    const Mlp student = mlp_from_json(load_json_file(cfg.student));
    Dataset data;
    if (!cfg.data.empty()) {
        data = load_dataset_csv(cfg.data, "external");
    } else {
        RngStream rng = RngStream(cfg.seed).substream(stream_tag::kData);
        auto [train, test] =
            generate_blobs(cfg.classes, cfg.dim, cfg.samples_per_class, cfg.spread, rng);
        data = std::move(test);
    }

    const AngleStats stats = feature_stats(teacher, student, data);
    const double std_t = classifier_weight_std(teacher);
    Json report{{"stats", to_json(stats)},
                {"teacher_classifier_std", std_t},
                {"student_classifier_std", classifier_weight_std(student)},
                {"expected_teacher_weight_norm",
                 expected_weight_norm(std_t, teacher.feature_dim())},
                {"teacher_feature_dim", teacher.feature_dim()},
                {"samples", data.size()}};
    write_file_atomic(out_dir / "stats.json", report.dump(2) + "\n");

    std::string csv = "index,label,student_pred,correct,teacher_norm,student_norm,angle_deg\n";
    for (std::size_t i = 0; i < data.size(); ++i) {
        const ForwardTrace tt = forward(teacher, data.inputs[i]);
        const ForwardTrace ts = forward(student, data.inputs[i]);
        const double nt = norm2(tt.feature);
        const double ns = norm2(ts.feature);
        const std::size_t pred = argmax_index(ts.logits);
        const double angle = (nt > 0.0 && ns > 0.0)
                                 ? angle_between(tt.feature, ts.feature) * 180.0 / std::numbers::pi
                                 : 0.0;
        csv += std::to_string(i) + ',' + std::to_string(data.labels[i]) + ',' +
               std::to_string(pred) + ',' + (pred == data.labels[i] ? "1" : "0") + ',' +
               fmt_double(nt) + ',' + fmt_double(ns) + ',' + fmt_double(angle) + '\n';
    }
    write_file_atomic(out_dir / "per_sample.csv", csv);

    CommandResult result;
    result.outputs = {"stats.json", "per_sample.csv"};
    return result;
}

// ---------------------------------------------------------------------------
// manifest plumbing

int finish_command(const std::string& command, const Json& config,
                   const CommandResult& result, const fs::path& out_dir,
                   std::chrono::steady_clock::time_point started) {
    const double wall =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - started).count();
    Json manifest{{"command", command},
                  {"config", config},
                  {"seed", config.contains("seed") ? config.at("seed") : Json(nullptr)},
                  {"version", featkd::kVersion},
                  {"rng", featkd::kRngName},
                  {"outputs", result.outputs},
                  {"wall_clock_sec", wall}};
    featkd::write_file_atomic(out_dir / "manifest.json", manifest.dump(2) + "\n");
    std::printf("%s: %s (outputs in %s)\n", command.c_str(),
                result.pass ? "ok" : "check failed", out_dir.string().c_str());
    return result.pass ? 0 : 1;
}

int dispatch(const std::string& command, const Json& config, const fs::path& out_dir) {
    const auto started = std::chrono::steady_clock::now();
    CommandResult result;
    if (command == "theory") {
        result = run_theory(TheoryConfig::from_json(config), out_dir);
    } else if (command == "distill") {
        result = run_distill(DistillCliConfig::from_json(config), out_dir);
    } else if (command == "merge-check") {
        result = run_merge_check(MergeCheckConfig::from_json(config), out_dir);
    } else if (command == "stats") {
        result = run_stats(StatsConfig::from_json(config), out_dir);
    } else {
        throw std::invalid_argument("unknown command in manifest: " + command);
    }
    return finish_command(command, config, result, out_dir, started);
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Feature-mimicking knowledge distillation with an LSH direction loss"};
    app.require_subcommand(1);

    // theory ----------------------------------------------------------------
    TheoryConfig theory;
    std::string theory_out = "theory-out";
    CLI::App* theory_cmd =
        app.add_subcommand("theory", "Numerical verification of the hashing-loss theory");
    theory_cmd->add_option("--seed", theory.seed, "Random seed")->required();
    theory_cmd->add_option("--out", theory_out, "Output directory");
    CLI::Option_group* task_group =
        theory_cmd->add_option_group("task", "What to verify or emit");
    task_group->add_option("--claim", theory.claim, "Claim to verify (1-4)")
        ->check(CLI::Range(1, 4));
    task_group->add_flag("--curve", theory.curve, "Emit cumulative angle curves");
    task_group->require_option(1);
    theory_cmd->add_option("--dim", theory.dim, "Feature dimension D");
    theory_cmd->add_option("--n-hash", theory.n_hash_list,
                           "Hash count N (comma list in curve mode)");
    theory_cmd->add_option("--theta", theory.theta, "Angle in radians (claim 3)");
    theory_cmd->add_option("--samples", theory.samples, "MC samples or randomized trials");
    theory_cmd->add_option("--points", theory.points, "Epsilon grid points");
    theory_cmd->add_option("--chunks", theory.chunks, "MC chunk count");
    theory_cmd->add_option("--tol", theory.tol, "Sup-norm tolerance (claim 4)");

    // distill ---------------------------------------------------------------
    DistillCliConfig dis;
    std::string distill_out = "distill-out";
    CLI::App* distill_cmd =
        app.add_subcommand("distill", "Train a student on synthetic blobs with a frozen teacher");
    distill_cmd->add_option("--seed", dis.seed, "Random seed")->required();
    distill_cmd->add_option("--out", distill_out, "Output directory");
    distill_cmd->add_option("--mode", dis.mode, "Loss mode: ce|l2|lsh|lshl2")
        ->check(CLI::IsMember({"ce", "l2", "lsh", "lshl2"}));
    distill_cmd->add_option("--beta", dis.beta, "Weight of the mimicking terms");
    distill_cmd->add_option("--n-hash", dis.n_hash, "Number of hash functions");
    distill_cmd->add_option("--std-hash", dis.std_hash,
                            "Hash sampler std; <= 0 uses the teacher classifier std");
    distill_cmd->add_option("--bias-init", dis.bias_init, "zero|mean|median")
        ->check(CLI::IsMember({"zero", "mean", "median"}));
    distill_cmd->add_option("--lr", dis.lr, "Student learning rate");
    distill_cmd->add_option("--epochs", dis.epochs, "Student epochs (per stage)");
    distill_cmd->add_option("--batch-size", dis.batch_size, "Batch size");
    distill_cmd->add_option("--avg-last-k", dis.avg_last_k, "Average the last K epoch snapshots");
    distill_cmd->add_flag("--embed,!--no-embed", dis.embed,
                          "Give the student a linear embedding layer");
    distill_cmd->add_flag("--filter,!--no-filter", dis.filter,
                          "Mimic only teacher-correct samples");
    distill_cmd->add_flag("--two-stage", dis.two_stage, "Run the two-stage schedule");
    distill_cmd->add_option("--stage1", dis.stage1, "Stage-1 mimicking mode")
        ->check(CLI::IsMember({"l2", "lsh", "lshl2"}));
    distill_cmd->add_option("--stage2", dis.stage2, "Stage-2 mode")
        ->check(CLI::IsMember({"ce", "l2", "lsh", "lshl2"}));
    distill_cmd->add_option("--classes", dis.classes, "Number of blob classes");
    distill_cmd->add_option("--dim", dis.dim, "Input dimension");
    distill_cmd->add_option("--samples-per-class", dis.samples_per_class,
                            "Samples per class per split");
    distill_cmd->add_option("--spread", dis.spread, "Blob spread (calibrated default)");
    distill_cmd->add_option("--teacher-hidden", dis.teacher_hidden, "Teacher widths, comma list");
    distill_cmd->add_option("--student-hidden", dis.student_hidden, "Student widths, comma list");
    distill_cmd->add_option("--teacher-lr", dis.teacher_lr, "Teacher learning rate");
    distill_cmd->add_option("--teacher-epochs", dis.teacher_epochs, "Teacher epochs");

    // merge-check -----------------------------------------------------------
    MergeCheckConfig merge;
    std::string merge_out = "merge-out";
    CLI::App* merge_cmd =
        app.add_subcommand("merge-check", "Fold the embedding into the classifier and verify");
    merge_cmd->add_option("--checkpoint", merge.checkpoint, "Student checkpoint JSON")
        ->required();
    merge_cmd->add_option("--seed", merge.seed, "Random seed for probes")->required();
    merge_cmd->add_option("--out", merge_out, "Output directory");
    merge_cmd->add_option("--probes", merge.probes, "Number of random probes");
    merge_cmd->add_option("--tol", merge.tol, "Max allowed prediction deviation");

    // stats -----------------------------------------------------------------
    StatsConfig stats;
    std::string stats_out = "stats-out";
    CLI::App* stats_cmd =
        app.add_subcommand("stats", "Angle and norm diagnostics between two checkpoints");
    stats_cmd->add_option("--teacher", stats.teacher, "Teacher checkpoint JSON")->required();
    stats_cmd->add_option("--student", stats.student, "Student checkpoint JSON")->required();
    stats_cmd->add_option("--seed", stats.seed, "Random seed")->required();
    stats_cmd->add_option("--out", stats_out, "Output directory");
    stats_cmd->add_option("--data", stats.data, "Dataset CSV (label,x0,x1,...)");
    stats_cmd->add_option("--classes", stats.classes, "Blob classes when synthesizing");
    stats_cmd->add_option("--dim", stats.dim, "Input dimension when synthesizing");
    stats_cmd->add_option("--samples-per-class", stats.samples_per_class,
                          "Samples per class when synthesizing");
    stats_cmd->add_option("--spread", stats.spread, "Blob spread when synthesizing");

    // replay ----------------------------------------------------------------
    std::string replay_manifest;
    std::string replay_out;
    CLI::App* replay_cmd =
        app.add_subcommand("replay", "Re-run a recorded manifest into a new directory");
    replay_cmd->add_option("--manifest", replay_manifest, "Path to manifest.json")->required();
    replay_cmd->add_option("--out", replay_out, "Output directory")->required();

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        if (e.get_exit_code() == 0) {
            return app.exit(e);  // --help and friends
        }
        app.exit(e);
        return 2;
    }

    try {
        if (theory_cmd->parsed()) {
            const auto started = std::chrono::steady_clock::now();
            const CommandResult r = run_theory(theory, theory_out);
            return finish_command("theory", theory.to_json(), r, theory_out, started);
        }
        if (distill_cmd->parsed()) {
            const auto started = std::chrono::steady_clock::now();
            const CommandResult r = run_distill(dis, distill_out);
            return finish_command("distill", dis.to_json(), r, distill_out, started);
        }
        if (merge_cmd->parsed()) {
            const auto started = std::chrono::steady_clock::now();
            const CommandResult r = run_merge_check(merge, merge_out);
            return finish_command("merge-check", merge.to_json(), r, merge_out, started);
        }
        if (stats_cmd->parsed()) {
            const auto started = std::chrono::steady_clock::now();
            const CommandResult r = run_stats(stats, stats_out);
            return finish_command("stats", stats.to_json(), r, stats_out, started);
        }
        if (replay_cmd->parsed()) {
            const Json manifest = featkd::load_json_file(replay_manifest);
            return dispatch(manifest.at("command").get<std::string>(), manifest.at("config"),
                            replay_out);
        }
    } catch (const std::exception& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return 1;
    }
    return 2;
}
