#include "panacea/cli.hpp"

#include <chrono>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>

#include <openssl/evp.h>
#include <fmt/format.h>
#include "CLI11.hpp"
#include "json.hpp"

#include "panacea/error.hpp"
#include "panacea/serve.hpp"
#include "panacea/training.hpp"

// After Eigen: httplib pulls in <resolv.h>, whose `_res` macro collides with
// Eigen parameter names.
#include "httplib.h"

namespace panacea {

namespace fs = std::filesystem;
using nlohmann::json;
using nlohmann::ordered_json;

std::string sha256_hex(std::string_view data) {
    unsigned char digest[EVP_MAX_MD_SIZE];
    unsigned int length = 0;
    if (EVP_Digest(data.data(), data.size(), digest, &length, EVP_sha256(), nullptr) != 1) {
        throw Error("SHA-256 computation failed");
    }
    std::string out;
    for (unsigned int i = 0; i < length; ++i) {
        out += fmt::format("{:02x}", digest[i]);
    }
    return out;
}

void write_file_atomic(const std::string& path, std::string_view content) {
    const fs::path target(path);
    if (target.has_parent_path()) {
        fs::create_directories(target.parent_path());
    }
    const fs::path temp = target.string() + ".tmp";
    {
        std::ofstream out(temp, std::ios::binary | std::ios::trunc);
        if (!out) {
            throw Error(fmt::format("cannot open {} for writing", temp.string()));
        }
        out.write(content.data(), static_cast<std::streamsize>(content.size()));
        if (!out) {
            throw Error(fmt::format("write to {} failed", temp.string()));
        }
    }
    fs::rename(temp, target);
}

namespace {

struct UsageError : Error {
    using Error::Error;
};

std::string read_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) {
        throw Error(fmt::format("cannot read {}", path));
    }
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

std::string resolve_out(const std::string& flag) {
    if (!flag.empty()) {
        return flag;
    }
    if (const char* env = std::getenv("PANACEA_OUT"); env != nullptr && *env != '\0') {
        return env;
    }
    return "panacea-out";
}

// Collects emitted files and writes the run manifest last.
class Artifacts {
public:
    Artifacts(std::string dir, std::string command)
        : dir_(std::move(dir)), command_(std::move(command)), start_(std::chrono::steady_clock::now()) {
        fs::create_directories(dir_);
    }

    std::string path(const std::string& name) const { return (fs::path(dir_) / name).string(); }

    std::string write(const std::string& name, const std::string& content) {
        const std::string p = path(name);
        write_file_atomic(p, content);
        ordered_json entry;
        entry["path"] = name;
        entry["bytes"] = content.size();
        entry["sha256"] = sha256_hex(content);
        outputs_.push_back(std::move(entry));
        return p;
    }

    std::string finish(ordered_json extra) {
        ordered_json m;
        m["command"] = command_;
        for (auto& [key, value] : extra.items()) {
            m[key] = value;
        }
        m["outputs"] = outputs_;
        m["wall_clock_seconds"] =
            std::chrono::duration<double>(std::chrono::steady_clock::now() - start_).count();
        const std::string p = path(command_ + ".manifest.json");
        write_file_atomic(p, m.dump(2) + "\n");
        return p;
    }

private:
    std::string dir_;
    std::string command_;
    std::chrono::steady_clock::time_point start_;
    ordered_json outputs_ = ordered_json::array();
};

// Training flags shared by train, misalign and data. Only flags that were
// given override the config file (or defaults).
struct TrainFlags {
    std::string method, objective, agg, schedule, config_file;
    std::uint64_t seed = 0, task_seed = 0;
    std::size_t iters = 0, k = 0, m = 0, batch = 0;
    double lr = 0, beta = 0, fixed_scaling = 0;
    std::vector<double> lambda;
    CLI::Option *o_seed{}, *o_task_seed{}, *o_iters{}, *o_k{}, *o_m{}, *o_batch{}, *o_lr{}, *o_beta{},
        *o_fixed_scaling{}, *o_lambda{};

    void add(CLI::App& app, bool full) {
        app.add_option("--config", config_file, "JSON config file; flags override its values")
            ->check(CLI::ExistingFile);
        o_seed = app.add_option("--seed", seed, "Training seed");
        o_iters = app.add_option("--iters", iters, "Gradient steps T")->check(CLI::PositiveNumber);
        o_lr = app.add_option("--lr", lr, "Adam learning rate")->check(CLI::PositiveNumber);
        o_beta = app.add_option("--beta", beta, "KL / DPO temperature")->check(CLI::PositiveNumber);
        o_k = app.add_option("--k", k, "Core SVD-LoRA rank");
        o_task_seed = app.add_option("--task-seed", task_seed, "Synthetic task seed");
        app.add_option("--schedule", schedule, "Learning-rate schedule (constant | cosine)");
        if (!full) {
            return;
        }
        app.add_option("--method", method, "panacea | dps | rs");
        app.add_option("--objective", objective, "rlhf | dpo");
        app.add_option("--agg", agg, "ls | tche");
        o_m = app.add_option("--m", m, "Preference dimensions");
        o_batch = app.add_option("--batch", batch, "DPO batch size")->check(CLI::PositiveNumber);
        o_lambda = app.add_option("--lambda", lambda, "Fixed preference vector for dps, e.g. 0.3,0.7")->delimiter(',');
        o_fixed_scaling =
            app.add_option("--fixed-scaling", fixed_scaling, "Freeze every layer's scaling factor at this value");
    }

    TrainConfig resolve() const {
        TrainConfig c;
        if (!config_file.empty()) {
            const json j = json::parse(read_file(config_file), nullptr, false);
            if (j.is_discarded()) {
                throw UsageError(fmt::format("--config {}: not valid JSON", config_file));
            }
            try {
                c = config_from_json(j, c);
            } catch (const InvalidArgument& e) {
                throw UsageError(fmt::format("--config {}: {}", config_file, e.what()));
            }
        }
        try {
            if (!method.empty()) c.method = parse_method(method);
            if (!objective.empty()) c.objective = parse_objective(objective);
            if (!agg.empty()) c.aggregation = parse_aggregation(agg);
            if (!schedule.empty()) c.schedule = parse_schedule(schedule);
        } catch (const InvalidArgument& e) {
            throw UsageError(e.what());
        }
        if (o_seed && o_seed->count()) c.seed = seed;
        if (o_task_seed && o_task_seed->count()) c.task_seed = task_seed;
        if (o_iters && o_iters->count()) c.iters = iters;
        if (o_lr && o_lr->count()) c.lr = lr;
        if (o_beta && o_beta->count()) c.beta = beta;
        if (o_k && o_k->count()) c.k = k;
        if (o_m && o_m->count()) c.m = m;
        if (o_batch && o_batch->count()) c.batch = batch;
        if (o_lambda && o_lambda->count()) c.fixed_lambda = lambda;
        if (o_fixed_scaling && o_fixed_scaling->count()) c.fixed_scaling = fixed_scaling;
        if (c.method == Method::Dps && !c.fixed_lambda) {
            throw UsageError("--lambda is required with --method dps");
        }
        if (c.fixed_lambda && c.fixed_lambda->size() != c.m) {
            throw UsageError(fmt::format("--lambda has {} components but --m is {}", c.fixed_lambda->size(), c.m));
        }
        try {
            validate(c);
            if (c.fixed_lambda) {
                (void)PreferenceVector(*c.fixed_lambda);
            }
        } catch (const InvalidArgument& e) {
            throw UsageError(e.what());
        }
        return c;
    }
};

std::string curve_csv(const std::vector<CurvePoint>& curve) {
    std::string out = "step,objective,smoothed\n";
    for (const CurvePoint& p : curve) {
        out += fmt::format("{},{},{}\n", p.step, format_double(p.objective), format_double(p.smoothed));
    }
    return out;
}

// train -----------------------------------------------------------------------

int cmd_train(const TrainFlags& flags, const std::string& out_flag, bool quiet) {
    const TrainConfig config = flags.resolve();
    const Problem problem = make_problem(config);
    Artifacts artifacts(resolve_out(out_flag), "train");
    const auto t0 = std::chrono::steady_clock::now();
    ordered_json extra;
    extra["config"] = to_json(config);
    extra["task_seed"] = config.task_seed;
    extra["ablation"] = config.fixed_scaling ? ordered_json{{"fixed_scaling", *config.fixed_scaling}} : ordered_json();
    std::vector<TrainResult> results;
    std::vector<TrainConfig> configs;
    if (config.method == Method::Rs) {
        results = train_rs(config, problem);
        for (std::size_t i = 0; i < config.m; ++i) {
            TrainConfig expert = config;
            const PreferenceVector vertex = PreferenceVector::vertex(config.m, i);
            expert.fixed_lambda = std::vector<double>(vertex.weights().begin(), vertex.weights().end());
            expert.seed = config.seed + rs_seed_offset * i;
            configs.push_back(expert);
        }
        for (std::size_t i = 0; i < results.size(); ++i) {
            artifacts.write(fmt::format("rs_expert_{}.json", i + 1),
                            serialize_checkpoint({configs[i], results[i].steps, results[i].model}));
            artifacts.write(fmt::format("rs_expert_{}_curve.csv", i + 1), curve_csv(results[i].curve));
        }
    } else {
        results.push_back(train(config, problem));
        artifacts.write("checkpoint.json", serialize_checkpoint({config, results[0].steps, results[0].model}));
        artifacts.write("curve.csv", curve_csv(results[0].curve));
    }
    const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    const std::string manifest = artifacts.finish(std::move(extra));
    if (!quiet) {
        std::size_t steps = 0;
        for (const TrainResult& r : results) {
            steps += r.steps;
        }
        fmt::print("trained {} {}/{} for {} steps in {:.2f}s\nmanifest: {}\n", to_string(config.method),
                   to_string(config.objective), to_string(config.aggregation), steps, secs, manifest);
    }
    return exit_ok;
}

// sweep -----------------------------------------------------------------------

int cmd_sweep(const std::vector<std::string>& checkpoints, double interval, bool with_oracle,
              const std::string& name, const std::string& out_flag, bool quiet) {
    std::vector<Checkpoint> loaded;
    for (const std::string& path : checkpoints) {
        loaded.push_back(load_checkpoint(path));
    }
    const TrainConfig& config = loaded.front().config;
    if (with_oracle && config.objective != ObjectiveKind::Rlhf) {
        throw UsageError("--with-oracle needs an rlhf checkpoint (the closed-form optimum is an RLHF solution)");
    }
    std::vector<PreferenceVector> grid;
    try {
        grid = simplex_grid(config.m, interval);
    } catch (const InvalidArgument& e) {
        throw UsageError(fmt::format("--grid-interval: {}", e.what()));
    }
    const Problem problem = make_problem(config);

    std::vector<ObjectivePoint> points;
    std::string method = to_string(config.method);
    if (loaded.size() == 1) {
        points = sweep_model(loaded.front().model, grid, config, problem, method).points;
    } else {
        if (loaded.size() != config.m) {
            throw UsageError(fmt::format("interpolated sweep needs {} expert checkpoints, got {}", config.m,
                                         loaded.size()));
        }
        std::vector<PolicyNet> models;
        for (const Checkpoint& c : loaded) {
            models.push_back(c.model);
        }
        method = "rs";
        for (const PreferenceVector& lam : grid) {
            const auto w = lam.weights();
            points.push_back({evaluate_objectives(rs_interpolate(models, lam), lam, config, problem),
                              std::vector<double>(w.begin(), w.end()), method});
        }
    }
    std::vector<FrontRow> rows = to_rows(points);
    if (with_oracle) {
        const OracleFront oracle = oracle_front(problem.task.reward, problem.reference, grid, config.beta);
        for (std::size_t i = 0; i < rows.size(); ++i) {
            const Eigen::VectorXd& J = oracle.entries[i].objectives;
            rows[i].oracle_J.assign(J.data(), J.data() + J.size());
        }
    }
    Artifacts artifacts(resolve_out(out_flag), "sweep");
    std::ostringstream csv;
    write_front_csv(csv, rows);
    const std::string csv_path = artifacts.write(name + ".csv", csv.str());
    artifacts.write(name + ".json", dump_exact(front_to_json(rows)) + "\n");
    ordered_json extra;
    extra["config"] = to_json(config);
    extra["task_seed"] = config.task_seed;
    ordered_json inputs = ordered_json::array();
    for (const std::string& path : checkpoints) {
        inputs.push_back({{"path", path}, {"sha256", sha256_hex(read_file(path))}});
    }
    extra["inputs"] = std::move(inputs);
    extra["grid_interval"] = interval;
    const std::string manifest = artifacts.finish(std::move(extra));
    if (!quiet) {
        fmt::print("swept {} grid points ({} on the front)\nfront: {}\nmanifest: {}\n", rows.size(),
                   pareto_filter(points).size(), csv_path, manifest);
    }
    return exit_ok;
}

// misalign --------------------------------------------------------------------

std::vector<LabelerSpec> read_labelers(const std::string& path) {
    const json j = json::parse(read_file(path), nullptr, false);
    if (j.is_discarded()) {
        throw UsageError(fmt::format("--labelers {}: not valid JSON", path));
    }
    std::vector<LabelerSpec> labelers;
    try {
        for (const json& l : j.at("labelers")) {
            labelers.push_back({l.at("portion").get<double>(), PreferenceVector(l.at("preference").get<std::vector<double>>())});
        }
        validate(labelers);
    } catch (const json::exception& e) {
        throw UsageError(fmt::format("--labelers {}: {}", path, e.what()));
    } catch (const InvalidArgument& e) {
        throw UsageError(fmt::format("--labelers {}: {}", path, e.what()));
    }
    return labelers;
}

int cmd_misalign(const TrainFlags& flags, const std::string& labeler_file, std::size_t n_labels,
                 std::uint64_t label_seed, const std::string& out_flag, bool quiet) {
    const std::vector<LabelerSpec> labelers = read_labelers(labeler_file);
    TrainConfig config = flags.resolve();
    config.m = labelers.front().preference.size();
    config.method = Method::Dps;
    config.objective = ObjectiveKind::Rlhf;
    config.aggregation = Aggregation::Ls;
    const PreferenceVector neutral = PreferenceVector::uniform(config.m);
    config.fixed_lambda = std::vector<double>(neutral.weights().begin(), neutral.weights().end());
    const Problem problem = make_problem(config);
    const MisalignmentResult result = train_misaligned(config, problem, labelers, n_labels, label_seed);
    const MisalignmentReport& r = result.report;

    ordered_json report;
    report["lambda_opt"] = std::vector<double>(r.lam_opt.weights().begin(), r.lam_opt.weights().end());
    report["kl_to_optimum"] = r.kl_to_optimum;
    ordered_json list = ordered_json::array();
    for (std::size_t i = 0; i < labelers.size(); ++i) {
        ordered_json l;
        l["portion"] = labelers[i].portion;
        l["empirical_portion"] = r.empirical_portions[i];
        l["preference"] = std::vector<double>(labelers[i].preference.weights().begin(),
                                              labelers[i].preference.weights().end());
        l["kl"] = r.kl_to_labelers[i];
        list.push_back(std::move(l));
    }
    report["labelers"] = std::move(list);
    report["n_labels"] = n_labels;
    report["label_seed"] = label_seed;
    report["steps"] = result.trained.steps;

    Artifacts artifacts(resolve_out(out_flag), "misalign");
    const std::string report_path = artifacts.write("misalign.json", dump_exact(report) + "\n");
    artifacts.write("misalign_checkpoint.json",
                    serialize_checkpoint({config, result.trained.steps, result.trained.model}));
    ordered_json extra;
    extra["config"] = to_json(config);
    extra["task_seed"] = config.task_seed;
    const std::string manifest = artifacts.finish(std::move(extra));
    if (!quiet) {
        fmt::print("{}\nreport: {}\nmanifest: {}\n", report.dump(2), report_path, manifest);
    }
    return exit_ok;
}

// compare ---------------------------------------------------------------------

int cmd_compare(const std::vector<std::string>& files, const std::string& out_flag, bool quiet) {
    if (files.size() < 2) {
        throw UsageError("compare needs at least two front files");
    }
    std::vector<std::vector<ObjectivePoint>> all;
    std::vector<Front> fronts;
    for (const std::string& path : files) {
        std::ifstream in(path);
        if (!in) {
            throw Error(fmt::format("cannot read {}", path));
        }
        std::vector<ObjectivePoint> points = to_points(read_front_csv(in));
        if (points.empty()) {
            throw Error(fmt::format("{} has no rows", path));
        }
        if (!all.empty() && points.front().J.size() != all.front().front().J.size()) {
            throw UsageError(fmt::format("{} has {} objectives, {} has {}", path, points.front().J.size(),
                                         files.front(), all.front().front().J.size()));
        }
        fronts.push_back(pareto_filter(points));
        all.push_back(std::move(points));
    }
    const Eigen::VectorXd ref = shared_reference(all);
    ordered_json report;
    report["reference"] = std::vector<double>(ref.data(), ref.data() + ref.size());
    ordered_json entries = ordered_json::array();
    double best = -1.0;
    std::vector<std::size_t> winners;
    for (std::size_t i = 0; i < files.size(); ++i) {
        const double hv = hypervolume(fronts[i], ref);
        ordered_json e;
        e["path"] = files[i];
        e["method"] = all[i].front().method;
        e["points"] = all[i].size();
        e["front_points"] = fronts[i].size();
        e["hypervolume"] = hv;
        entries.push_back(std::move(e));
        if (hv > best) {
            best = hv;
            winners = {i};
        } else if (hv == best) {
            winners.push_back(i);
        }
    }
    report["fronts"] = std::move(entries);
    // dominance[i][j]: points of front j dominated by some point of front i.
    ordered_json dominance = ordered_json::array();
    for (std::size_t i = 0; i < files.size(); ++i) {
        ordered_json row = ordered_json::array();
        for (std::size_t j = 0; j < files.size(); ++j) {
            row.push_back(i == j ? 0 : count_dominated(fronts[i], fronts[j]));
        }
        dominance.push_back(std::move(row));
    }
    report["dominance"] = std::move(dominance);
    report["winner"] = winners.size() == 1 ? ordered_json(files[winners.front()]) : ordered_json("tie");

    const std::string text = dump_exact(report) + "\n";
    if (!out_flag.empty() || std::getenv("PANACEA_OUT") != nullptr) {
        Artifacts artifacts(resolve_out(out_flag), "compare");
        artifacts.write("compare.json", text);
        ordered_json inputs = ordered_json::array();
        for (const std::string& path : files) {
            inputs.push_back({{"path", path}, {"sha256", sha256_hex(read_file(path))}});
        }
        artifacts.finish({{"inputs", std::move(inputs)}});
    }
    if (!quiet) {
        fmt::print("{}", text);
    }
    return exit_ok;
}

// data ------------------------------------------------------------------------

int cmd_data(const TrainFlags& flags, const std::string& out_flag, bool quiet) {
    TrainConfig config = flags.resolve();
    config.objective = ObjectiveKind::Dpo;
    const Problem problem = make_problem(config);
    Artifacts artifacts(resolve_out(out_flag), "data");
    const std::string train = artifacts.write("dataset_train.json", dataset_to_json(problem.train_data, problem.task).dump() + "\n");
    artifacts.write("dataset_eval.json", dataset_to_json(problem.eval_data, problem.task).dump() + "\n");
    artifacts.finish({{"config", to_json(config)}, {"task_seed", config.task_seed}});
    if (!quiet) {
        fmt::print("wrote {} training and {} evaluation pairs per dimension to {}\n", config.n_pairs,
                   config.n_eval_pairs, fs::path(train).parent_path().string());
    }
    return exit_ok;
}

// serve -----------------------------------------------------------------------

int cmd_serve(const std::string& checkpoint_path, const std::string& host, int port, const std::string& origin) {
    const std::string bytes = read_file(checkpoint_path);
    Service service(parse_checkpoint(bytes), sha256_hex(bytes));
    httplib::Server server;
    mount(server, service, origin);
    if (!server.bind_to_port(host, port)) {
        throw Error(fmt::format("cannot bind {}:{}", host, port));
    }
    fmt::print("serving {} on http://{}:{}\n", checkpoint_path, host, port);
    std::fflush(stdout);
    if (!server.listen_after_bind()) {
        throw Error("server stopped unexpectedly");
    }
    return exit_ok;
}

}  // namespace

int run_cli(const std::vector<std::string>& args) {
    CLI::App app{"Pareto-set alignment with preference-embedded SVD-LoRA adapters"};
    app.require_subcommand(1);
    std::string out;
    bool quiet = false;

    TrainFlags train_flags;
    CLI::App* train = app.add_subcommand("train", "Train panacea, dps or rs and write a checkpoint");
    train_flags.add(*train, true);
    train->add_option("--out", out, "Output directory (default: $PANACEA_OUT or ./panacea-out)");
    train->add_flag("--quiet", quiet, "Suppress the summary");

    std::vector<std::string> checkpoints;
    double interval = 0.1;
    bool with_oracle = false;
    std::string name = "front";
    CLI::App* sweep = app.add_subcommand("sweep", "Evaluate a checkpoint over a preference grid");
    sweep->add_option("checkpoints", checkpoints, "Checkpoint, or the m rs expert checkpoints to interpolate")
        ->required();
    sweep->add_option("--grid-interval", interval, "Grid spacing on the simplex");
    sweep->add_flag("--with-oracle", with_oracle, "Add closed-form optimum columns J*_i (rlhf only)");
    sweep->add_option("--name", name, "Output file stem");
    sweep->add_option("--out", out, "Output directory");
    sweep->add_flag("--quiet", quiet, "Suppress the summary");

    TrainFlags misalign_flags;
    std::string labeler_file;
    std::size_t n_labels = 100000;
    std::uint64_t label_seed = 303;
    CLI::App* misalign = app.add_subcommand("misalign", "Train on pooled labels from heterogeneous labelers");
    misalign->add_option("--labelers", labeler_file, "JSON {labelers: [{portion, preference}]}")
        ->required()
        ->check(CLI::ExistingFile);
    misalign->add_option("--n-labels", n_labels, "Number of scalar labels to draw")->check(CLI::PositiveNumber);
    misalign->add_option("--label-seed", label_seed, "Seed for the label draw");
    misalign_flags.add(*misalign, false);
    misalign->add_option("--out", out, "Output directory");
    misalign->add_flag("--quiet", quiet, "Suppress the report");

    std::vector<std::string> front_files;
    CLI::App* compare = app.add_subcommand("compare", "Hypervolume and dominance comparison of front CSVs");
    compare->add_option("fronts", front_files, "Front CSV files")->required();
    compare->add_option("--out", out, "Also write compare.json here");
    compare->add_flag("--quiet", quiet, "Suppress the report");

    TrainFlags data_flags;
    CLI::App* data = app.add_subcommand("data", "Export the Bradley-Terry preference datasets");
    data_flags.add(*data, true);
    data->add_option("--out", out, "Output directory");
    data->add_flag("--quiet", quiet, "Suppress the summary");

    std::string serve_checkpoint;
    std::string host = "127.0.0.1";
    std::string origin = "*";
    int port = default_port;
    CLI::App* serve = app.add_subcommand("serve", "Serve a checkpoint over HTTP");
    serve->add_option("checkpoint", serve_checkpoint, "Checkpoint file")->required();
    serve->add_option("--port", port, "TCP port")->check(CLI::Range(0, 65535));
    serve->add_option("--host", host, "Bind address");
    serve->add_option("--origin", origin, "Allowed CORS origin");

    std::vector<std::string> reversed(args.rbegin(), args.rend());
    reversed.pop_back();  // program name
    try {
        app.parse(reversed);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? exit_ok : exit_usage;
    }

    try {
        if (*train) return cmd_train(train_flags, out, quiet);
        if (*sweep) return cmd_sweep(checkpoints, interval, with_oracle, name, out, quiet);
        if (*misalign) return cmd_misalign(misalign_flags, labeler_file, n_labels, label_seed, out, quiet);
        if (*compare) return cmd_compare(front_files, out, quiet);
        if (*data) return cmd_data(data_flags, out, quiet);
        if (*serve) return cmd_serve(serve_checkpoint, host, port, origin);
    } catch (const UsageError& e) {
        std::cerr << "error: " << e.what() << "\nRun with --help for usage.\n";
        return exit_usage;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return exit_runtime;
    }
    return exit_usage;
}

int run_cli(int argc, char** argv) { return run_cli(std::vector<std::string>(argv, argv + argc)); }

}  // namespace panacea
