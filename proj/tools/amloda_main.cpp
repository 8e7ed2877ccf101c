// amloda: experiment front-end for the occupancy-detection attack and the
// billing-preserving counter attack. All computation goes through the
// shared-library C API; this binary only orchestrates files and config.

#include <atomic>
#include <charconv>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <mutex>
#include <optional>
#include <sstream>
#include <string>
#include <thread>
#include <vector>

#include <CLI11.hpp>
#include <nlohmann/json.hpp>

#include "amloda/amloda.h"

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

constexpr int kExitUsage = 2;
constexpr int kExitData = 3;
constexpr int kExitNumeric = 4;

class CliError : public std::runtime_error {
public:
    CliError(int code, const std::string& msg) : std::runtime_error(msg), code_(code) {}
    int code() const { return code_; }

private:
    int code_;
};

// Exit-code policy: bad flags/config and missing paths are usage errors
// (2); malformed or unusable data contents are data errors (3) when they
// come from a data file; numeric trouble is always 4.
void check(amloda_status status, bool data_context = true) {
    if (status == AMLODA_OK) return;
    int code = kExitUsage;
    switch (status) {
        case AMLODA_ERR_INVALID_ARGUMENT:
        case AMLODA_ERR_IO:
            code = kExitUsage;
            break;
        case AMLODA_ERR_PARSE:
        case AMLODA_ERR_DATA:
            code = data_context ? kExitData : kExitUsage;
            break;
        case AMLODA_ERR_NUMERIC:
        case AMLODA_ERR_INTERNAL:
        default:
            code = kExitNumeric;
            break;
    }
    throw CliError(code, amloda_last_error());
}

std::string take_string(char* owned) {
    std::string out = owned ? owned : "";
    amloda_string_free(owned);
    return out;
}

std::string fmt_double(double v) {
    char buf[64];
    auto [ptr, ec] = std::to_chars(buf, buf + sizeof(buf), v);
    return ec == std::errc{} ? std::string(buf, ptr) : std::string("nan");
}

void write_file(const fs::path& path, const std::string& content) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw CliError(kExitData, "cannot write " + path.string());
    out << content;
    if (!out) throw CliError(kExitData, "write failed: " + path.string());
}

// RAII wrappers around the C handles.
struct Trace {
    amloda_trace* h = nullptr;
    Trace() = default;
    explicit Trace(amloda_trace* p) : h(p) {}
    Trace(Trace&& o) noexcept : h(o.h) { o.h = nullptr; }
    Trace& operator=(Trace&& o) noexcept {
        if (this != &o) {
            amloda_trace_free(h);
            h = o.h;
            o.h = nullptr;
        }
        return *this;
    }
    ~Trace() { amloda_trace_free(h); }
    Trace(const Trace&) = delete;
    Trace& operator=(const Trace&) = delete;
};

struct Labels {
    amloda_labels* h = nullptr;
    Labels() = default;
    explicit Labels(amloda_labels* p) : h(p) {}
    Labels(Labels&& o) noexcept : h(o.h) { o.h = nullptr; }
    Labels& operator=(Labels&& o) noexcept {
        if (this != &o) {
            amloda_labels_free(h);
            h = o.h;
            o.h = nullptr;
        }
        return *this;
    }
    ~Labels() { amloda_labels_free(h); }
    Labels(const Labels&) = delete;
    Labels& operator=(const Labels&) = delete;
};

struct Model {
    amloda_model* h = nullptr;
    Model() = default;
    explicit Model(amloda_model* p) : h(p) {}
    ~Model() { amloda_model_free(h); }
    Model(const Model&) = delete;
    Model& operator=(const Model&) = delete;
};

struct TariffHandle {
    amloda_tariff* h = nullptr;
    TariffHandle() = default;
    explicit TariffHandle(amloda_tariff* p) : h(p) {}
    ~TariffHandle() { amloda_tariff_free(h); }
    TariffHandle(const TariffHandle&) = delete;
    TariffHandle& operator=(const TariffHandle&) = delete;
};

json default_config() {
    return json{
        {"seed", 1},
        {"out", "out"},
        {"jobs", 1},
        {"checkpoint", ""},
        {"data",
         {{"source", "synth"},
          {"path", ""},
          {"synth",
           {{"day_count", 5},
            {"base_load_w", 120.0},
            {"appliance_burst_w", 30.0},
            {"background_spike_w", 2000.0},
            {"noise_std_w", 4.0},
            {"sample_period_s", 60},
            {"occupied_intervals", json::array({json::array({"06:30", "08:30"}),
                                                json::array({"17:00", "23:00"})})},
            {"seed", 0}}}}},
        {"train",
         {{"epochs", 20},
          {"learning_rate", 0.05},
          {"batch_size", 32},
          {"hidden_size", 32},
          {"seed", 0},
          {"window_len", 60},
          {"train_stride", 60},
          {"eval_stride", 1},
          {"train_fraction", 0.8}}},
        {"perturb",
         {{"epsilon", json::array({0.0, 0.0001, 0.001, 0.01})},
          {"gamma", nullptr},
          {"pair_period", 2},
          {"use_true_labels", false}}},
        {"gaussian", {{"sigma2", nullptr}, {"seed", 0}}},
        {"tariff", json::array()},
    };
}

void merge_into(json& base, const json& overlay) {
    for (auto it = overlay.begin(); it != overlay.end(); ++it) {
        if (it.value().is_object() && base.contains(it.key()) && base[it.key()].is_object())
            merge_into(base[it.key()], it.value());
        else
            base[it.key()] = it.value();
    }
}

// Seeds left at 0 inherit the global seed.
void resolve_seeds(json& config) {
    const std::uint64_t seed = config.at("seed").get<std::uint64_t>();
    for (const char* path : {"/data/synth/seed", "/train/seed", "/gaussian/seed"}) {
        json::json_pointer ptr(path);
        if (config.at(ptr).get<std::uint64_t>() == 0) config[ptr] = seed;
    }
}

struct Dataset {
    Trace trace;
    Labels labels;
};

Dataset load_dataset(const json& config, const fs::path& out_dir) {
    const json& data = config.at("data");
    const std::string source = data.at("source").get<std::string>();
    Dataset ds;
    if (source == "synth") {
        amloda_trace* t = nullptr;
        amloda_labels* l = nullptr;
        check(amloda_synth_household(data.at("synth").dump().c_str(), &t, &l), false);
        ds.trace = Trace(t);
        ds.labels = Labels(l);
    } else if (source == "eco-csv") {
        const std::string path = data.at("path").get<std::string>();
        if (path.empty()) throw CliError(kExitUsage, "data.path required for eco-csv source");
        amloda_trace* raw = nullptr;
        amloda_labels* raw_labels = nullptr;
        check(amloda_trace_load_csv(path.c_str(), &raw, &raw_labels));
        Trace raw_guard(raw);
        Labels raw_labels_guard(raw_labels);
        if (!raw_labels)
            throw CliError(kExitData, "dataset " + path + " has no occupied column");
        amloda_trace* clean = nullptr;
        amloda_labels* clean_labels = nullptr;
        char* report = nullptr;
        check(amloda_clean_missing(raw, raw_labels, &clean, &clean_labels, &report));
        ds.trace = Trace(clean);
        ds.labels = Labels(clean_labels);
        write_file(out_dir / "cleaning_report.json", take_string(report) + "\n");
    } else {
        throw CliError(kExitUsage, "data.source must be \"synth\" or \"eco-csv\"");
    }
    return ds;
}

fs::path checkpoint_path(const json& config, const fs::path& out_dir) {
    const std::string explicit_path = config.at("checkpoint").get<std::string>();
    return explicit_path.empty() ? out_dir / "model.json" : fs::path(explicit_path);
}

void print_eval_table(const json& eval) {
    const char* names[] = {"accuracy", "precision", "recall", "f1", "fpr", "fnr", "mcc", "auc"};
    std::string header, row;
    for (const char* n : names) {
        char buf[32];
        std::snprintf(buf, sizeof(buf), "%-11s", n);
        header += buf;
        if (eval.contains(n) && !eval.at(n).is_null())
            std::snprintf(buf, sizeof(buf), "%-11.4f", eval.at(n).get<double>());
        else
            std::snprintf(buf, sizeof(buf), "%-11s", "n/a");
        row += buf;
    }
    std::cout << header << "\n" << row << "\n";
}

json parse_eval(const std::string& text) { return json::parse(text); }

// ---- subcommands --------------------------------------------------------

int cmd_synth(const json& config, const fs::path& out_dir) {
    Dataset ds = load_dataset(config, out_dir);
    const fs::path path = out_dir / "synthetic.csv";
    check(amloda_trace_save_csv(ds.trace.h, ds.labels.h, path.string().c_str()));
    std::cout << "wrote " << path.string() << " (" << amloda_trace_len(ds.trace.h)
              << " samples)\n";
    return 0;
}

int cmd_train(const json& config, const fs::path& out_dir) {
    Dataset ds = load_dataset(config, out_dir);
    check(amloda_trace_save_csv(ds.trace.h, ds.labels.h,
                                (out_dir / "original.csv").string().c_str()));

    amloda_model* model = nullptr;
    char* report_text = nullptr;
    check(amloda_train(ds.trace.h, ds.labels.h, config.at("train").dump().c_str(), &model,
                       &report_text),
          false);
    Model guard(model);
    const json report = json::parse(take_string(report_text));

    const fs::path ckpt = checkpoint_path(config, out_dir);
    check(amloda_model_save(model, ckpt.string().c_str()));

    std::string loss_csv = "epoch,mean_loss\n";
    const auto& history = report.at("loss_history");
    for (std::size_t e = 0; e < history.size(); ++e)
        loss_csv += std::to_string(e) + "," + fmt_double(history[e].get<double>()) + "\n";
    write_file(out_dir / "loss_history.csv", loss_csv);
    write_file(out_dir / "train_report.json", report.dump(2) + "\n");

    std::cout << "checkpoint: " << ckpt.string() << "\n";
    std::cout << "test-split attack performance:\n";
    print_eval_table(report.at("test_eval"));
    return 0;
}

struct SweepRow {
    double epsilon = 0.0;
    json eval;
    json perturb_report;
};

SweepRow run_sweep_row(const amloda_model* model, const Dataset& ds, const json& config,
                       double epsilon, const fs::path& out_dir) {
    json perturb_cfg = config.at("perturb");
    perturb_cfg["epsilon"] = epsilon;

    amloda_trace* perturbed = nullptr;
    char* perturb_report = nullptr;
    check(amloda_generate_oblivious(model, ds.trace.h, ds.labels.h, perturb_cfg.dump().c_str(),
                                    &perturbed, &perturb_report),
          false);
    Trace perturbed_guard(perturbed);

    SweepRow row;
    row.epsilon = epsilon;
    row.perturb_report = json::parse(take_string(perturb_report));

    const fs::path trace_path = out_dir / ("perturbed_amloda_eps" + fmt_double(epsilon) + ".csv");
    check(amloda_trace_save_csv(perturbed, nullptr, trace_path.string().c_str()));

    char* eval_text = nullptr;
    check(amloda_model_evaluate(model, perturbed, ds.labels.h, R"({"split":"test"})", &eval_text),
          false);
    row.eval = parse_eval(take_string(eval_text));
    return row;
}

int cmd_sweep(const json& config, const fs::path& out_dir) {
    Dataset ds = load_dataset(config, out_dir);
    check(amloda_trace_save_csv(ds.trace.h, ds.labels.h,
                                (out_dir / "original.csv").string().c_str()));

    amloda_model* model = nullptr;
    check(amloda_model_load(checkpoint_path(config, out_dir).string().c_str(), &model));
    Model guard(model);

    std::vector<double> epsilons = config.at("perturb").at("epsilon").get<std::vector<double>>();
    if (epsilons.empty()) throw CliError(kExitUsage, "perturb.epsilon list is empty");
    for (std::size_t i = 0; i < epsilons.size(); ++i)
        for (std::size_t j = i + 1; j < epsilons.size(); ++j)
            if (epsilons[i] == epsilons[j])
                throw CliError(kExitUsage, "duplicate epsilon value in perturb.epsilon");

    const int jobs = std::max(1, config.at("jobs").get<int>());
    std::vector<SweepRow> rows(epsilons.size());
    std::atomic<std::size_t> next{0};
    std::mutex error_mutex;
    std::optional<CliError> first_error;

    auto worker = [&] {
        for (;;) {
            const std::size_t i = next.fetch_add(1);
            if (i >= epsilons.size()) return;
            try {
                rows[i] = run_sweep_row(model, ds, config, epsilons[i], out_dir);
            } catch (const CliError& e) {
                std::lock_guard<std::mutex> lock(error_mutex);
                if (!first_error) first_error = e;
                return;
            } catch (const std::exception& e) {
                std::lock_guard<std::mutex> lock(error_mutex);
                if (!first_error) first_error = CliError(kExitNumeric, e.what());
                return;
            }
        }
    };
    {
        std::vector<std::thread> pool;
        const std::size_t n_threads =
            std::min<std::size_t>(static_cast<std::size_t>(jobs), epsilons.size());
        for (std::size_t i = 0; i < n_threads; ++i) pool.emplace_back(worker);
        for (auto& t : pool) t.join();
    }
    if (first_error) throw *first_error;

    std::string csv = "epsilon,accuracy,mcc,auc\n";
    auto field = [](const json& eval, const char* name) {
        return eval.contains(name) && !eval.at(name).is_null()
                   ? fmt_double(eval.at(name).get<double>())
                   : std::string("nan");
    };
    for (const SweepRow& row : rows) {
        csv += fmt_double(row.epsilon) + "," + field(row.eval, "accuracy") + "," +
               field(row.eval, "mcc") + "," + field(row.eval, "auc") + "\n";
    }
    write_file(out_dir / "sweep.csv", csv);

    // degradation between the epsilon=0 baseline and the strongest epsilon
    json summary;
    summary["rows"] = json::array();
    for (const SweepRow& row : rows) {
        json r;
        r["epsilon"] = row.epsilon;
        r["eval"] = row.eval;
        r["perturbation"] = row.perturb_report;
        summary["rows"].push_back(r);
    }
    const auto baseline = std::find_if(rows.begin(), rows.end(),
                                       [](const SweepRow& r) { return r.epsilon == 0.0; });
    const auto strongest = std::max_element(
        rows.begin(), rows.end(),
        [](const SweepRow& a, const SweepRow& b) { return a.epsilon < b.epsilon; });
    if (baseline != rows.end() && strongest != rows.end() && baseline != strongest &&
        !baseline->eval.at("accuracy").is_null() && !strongest->eval.at("accuracy").is_null()) {
        const double acc0 = baseline->eval.at("accuracy").get<double>();
        const double acc1 = strongest->eval.at("accuracy").get<double>();
        summary["degradation"] = {{"baseline_accuracy", acc0},
                                  {"strongest_epsilon", strongest->epsilon},
                                  {"strongest_accuracy", acc1},
                                  {"degraded", acc1 <= acc0}};
        std::cout << "degradation check: accuracy " << fmt_double(acc0) << " at eps=0 -> "
                  << fmt_double(acc1) << " at eps=" << fmt_double(strongest->epsilon)
                  << (acc1 <= acc0 ? " (degraded)" : " (NOT degraded)") << "\n";
    }
    write_file(out_dir / "sweep_report.json", summary.dump(2) + "\n");

    std::cout << "epsilon     accuracy    mcc         auc\n";
    for (const SweepRow& row : rows) {
        char buf[128];
        auto opt = [&](const char* name) {
            return row.eval.contains(name) && !row.eval.at(name).is_null()
                       ? row.eval.at(name).get<double>()
                       : std::nan("");
        };
        std::snprintf(buf, sizeof(buf), "%-12g%-12.4f%-12.4f%-12.4f", row.epsilon,
                      opt("accuracy"), opt("mcc"), opt("auc"));
        std::cout << buf << "\n";
    }
    std::cout << "wrote " << (out_dir / "sweep.csv").string() << "\n";
    return 0;
}

int cmd_compare(const json& config, const fs::path& out_dir) {
    Dataset ds = load_dataset(config, out_dir);
    check(amloda_trace_save_csv(ds.trace.h, ds.labels.h,
                                (out_dir / "original.csv").string().c_str()));

    amloda_model* model = nullptr;
    check(amloda_model_load(checkpoint_path(config, out_dir).string().c_str(), &model));
    Model guard(model);

    const std::vector<double> epsilons =
        config.at("perturb").at("epsilon").get<std::vector<double>>();
    if (epsilons.empty()) throw CliError(kExitUsage, "perturb.epsilon list is empty");
    const double epsilon = epsilons.front();

    // AMLODA side
    json perturb_cfg = config.at("perturb");
    perturb_cfg["epsilon"] = epsilon;
    amloda_trace* amloda_out = nullptr;
    char* amloda_report_text = nullptr;
    check(amloda_generate_oblivious(model, ds.trace.h, ds.labels.h, perturb_cfg.dump().c_str(),
                                    &amloda_out, &amloda_report_text),
          false);
    Trace amloda_guard(amloda_out);
    const json amloda_report = json::parse(take_string(amloda_report_text));
    check(amloda_trace_save_csv(
        amloda_out, nullptr,
        (out_dir / ("perturbed_amloda_eps" + fmt_double(epsilon) + ".csv")).string().c_str()));

    char* amloda_eval_text = nullptr;
    check(amloda_model_evaluate(model, amloda_out, ds.labels.h, R"({"split":"test"})",
                                &amloda_eval_text),
          false);
    const json amloda_eval = json::parse(take_string(amloda_eval_text));

    // Gaussian side at matched distortion unless sigma2 given explicitly
    double sigma2;
    const json& sigma_cfg = config.at("gaussian").at("sigma2");
    if (sigma_cfg.is_null()) {
        check(amloda_match_distortion(ds.trace.h, amloda_out, &sigma2), false);
        if (sigma2 <= 0)
            throw CliError(kExitUsage,
                           "matched distortion is zero (epsilon too small); pass gaussian.sigma2");
    } else {
        sigma2 = sigma_cfg.get<double>();
    }

    json gaussian_cfg = config.at("gaussian");
    gaussian_cfg["sigma2"] = sigma2;
    amloda_trace* gaussian_out = nullptr;
    char* gaussian_report_text = nullptr;
    check(amloda_gaussian_perturb(ds.trace.h, gaussian_cfg.dump().c_str(), &gaussian_out,
                                  &gaussian_report_text),
          false);
    Trace gaussian_guard(gaussian_out);
    const json gaussian_report = json::parse(take_string(gaussian_report_text));
    check(amloda_trace_save_csv(
        gaussian_out, nullptr,
        (out_dir / ("perturbed_gaussian_sigma2_" + fmt_double(sigma2) + ".csv")).string().c_str()));

    char* gaussian_eval_text = nullptr;
    check(amloda_model_evaluate(model, gaussian_out, ds.labels.h, R"({"split":"test"})",
                                &gaussian_eval_text),
          false);
    const json gaussian_eval = json::parse(take_string(gaussian_eval_text));

    json report;
    report["epsilon"] = epsilon;
    report["sigma2"] = sigma2;
    report["amloda"] = {{"eval", amloda_eval}, {"perturbation", amloda_report}};
    report["gaussian"] = {{"eval", gaussian_eval}, {"perturbation", gaussian_report}};
    write_file(out_dir / "compare_report.json", report.dump(2) + "\n");

    auto line = [&](const char* name, const json& eval, double delta) {
        char buf[160];
        auto opt = [&](const char* field) {
            return eval.contains(field) && !eval.at(field).is_null()
                       ? eval.at(field).get<double>()
                       : std::nan("");
        };
        std::snprintf(buf, sizeof(buf), "%-10s%-12.4f%-12.4f%-12.4f%-16g", name, opt("accuracy"),
                      opt("mcc"), opt("auc"), delta);
        std::cout << buf << "\n";
    };
    std::cout << "defense   accuracy    mcc         auc         total_delta_w\n";
    line("amloda", amloda_eval, amloda_report.at("total_delta_w").get<double>());
    line("gaussian", gaussian_eval, gaussian_report.at("total_delta_w").get<double>());
    std::cout << "sigma2 = " << fmt_double(sigma2) << " (matched distortion at epsilon "
              << fmt_double(epsilon) << ")\n";
    return 0;
}

int cmd_bill(const json& config, const fs::path& out_dir) {
    const std::vector<std::string> tariff_paths =
        config.at("tariff").get<std::vector<std::string>>();
    if (tariff_paths.empty())
        throw CliError(kExitUsage, "no tariff files given (use --tariff or config tariff list)");

    const fs::path original_path = out_dir / "original.csv";
    if (!fs::exists(original_path))
        throw CliError(kExitData,
                       original_path.string() + " not found; run sweep or compare first");
    amloda_trace* original = nullptr;
    check(amloda_trace_load_csv(original_path.string().c_str(), &original, nullptr));
    Trace original_guard(original);

    std::vector<fs::path> perturbed_files;
    for (const auto& entry : fs::directory_iterator(out_dir))
        if (entry.is_regular_file() && entry.path().filename().string().rfind("perturbed_", 0) == 0 &&
            entry.path().extension() == ".csv")
            perturbed_files.push_back(entry.path());
    std::sort(perturbed_files.begin(), perturbed_files.end());
    if (perturbed_files.empty())
        throw CliError(kExitData, "no perturbed_*.csv in " + out_dir.string() +
                                      "; run sweep or compare first");

    json results = json::array();
    bool all_invariant = true;
    for (const std::string& tariff_path : tariff_paths) {
        amloda_tariff* tariff = nullptr;
        check(amloda_tariff_load(tariff_path.c_str(), &tariff), false);
        TariffHandle tariff_guard(tariff);
        for (const fs::path& file : perturbed_files) {
            amloda_trace* perturbed = nullptr;
            check(amloda_trace_load_csv(file.string().c_str(), &perturbed, nullptr));
            Trace perturbed_guard(perturbed);
            char* report_text = nullptr;
            check(amloda_billing_invariance(tariff, original, perturbed, 0, &report_text), false);
            json report = json::parse(take_string(report_text));
            report["tariff"] = tariff_path;
            report["trace"] = file.filename().string();
            const bool invariant = report.at("invariant").get<bool>();
            all_invariant = all_invariant && invariant;
            std::cout << tariff_path << " x " << file.filename().string() << ": bill "
                      << fmt_double(report.at("bill_original").get<double>()) << " -> "
                      << fmt_double(report.at("bill_perturbed").get<double>()) << " ("
                      << (invariant ? "invariant" : "CHANGED") << ")\n";
            results.push_back(std::move(report));
        }
    }
    write_file(out_dir / "bill_report.json", results.dump(2) + "\n");
    std::cout << (all_invariant ? "all bills invariant\n" : "some bills changed\n");
    return 0;
}

int cmd_gradcheck(const json& config) {
    json options = config.contains("gradcheck") ? config.at("gradcheck") : json::object();
    if (!options.contains("seed")) options["seed"] = config.at("seed");
    char* report_text = nullptr;
    check(amloda_grad_check(options.dump().c_str(), &report_text), false);
    const json report = json::parse(take_string(report_text));
    const double err = report.at("max_rel_error").get<double>();
    std::cout << "trials:        " << report.at("trials").get<int>() << "\n";
    std::cout << "max rel error: " << fmt_double(err) << "\n";
    std::cout << "worst coord:   " << report.at("worst_coordinate").get<std::string>() << "\n";
    if (err >= 1e-4) {
        std::cerr << "gradient check FAILED (threshold 1e-4)\n";
        return kExitNumeric;
    }
    std::cout << "gradient check passed\n";
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Occupancy-detection attack on smart-meter traces and the "
                 "billing-preserving sign-gradient counter attack"};
    app.require_subcommand(1);
    app.allow_extras();  // dotted config overrides, e.g. --train.epochs 5

    std::string config_path;
    std::string out_dir_flag;
    std::string epsilon_list;
    std::string tariff_flag;
    std::optional<double> sigma2_flag;
    std::optional<std::uint64_t> seed_flag;
    std::optional<int> jobs_flag;
    bool use_true_labels = false;

    app.add_option("--config", config_path, "experiment config JSON");
    app.add_option("--seed", seed_flag, "global seed (overrides config)");
    app.add_option("--epsilon", epsilon_list, "comma-separated epsilon list");
    app.add_option("--sigma2", sigma2_flag, "Gaussian variance in watt^2");
    app.add_option("--tariff", tariff_flag, "tariff JSON file (repeatable via config)");
    app.add_option("--out", out_dir_flag, "output directory");
    app.add_option("--jobs", jobs_flag, "max parallel sweep rows");
    app.add_flag("--use-true-labels", use_true_labels,
                 "use ground-truth labels for gradient computation");

    app.add_subcommand("train", "train the attack classifier and write a checkpoint");
    app.add_subcommand("sweep", "run the AMLODA defense over an epsilon list");
    app.add_subcommand("compare", "AMLODA vs Gaussian at matched distortion");
    app.add_subcommand("bill", "verify billing invariance of perturbed traces");
    app.add_subcommand("synth", "emit the deterministic synthetic dataset");
    app.add_subcommand("gradcheck", "verify BPTT gradients against finite differences");
    for (auto* sub : app.get_subcommands({})) sub->allow_extras();

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int rc = app.exit(e);
        return rc == 0 ? 0 : kExitUsage;
    }

    try {
        json config = default_config();
        if (!config_path.empty()) {
            std::ifstream in(config_path);
            if (!in) throw CliError(kExitUsage, "cannot open config: " + config_path);
            json user;
            try {
                in >> user;
            } catch (const json::exception& e) {
                throw CliError(kExitUsage, std::string("bad config JSON: ") + e.what());
            }
            merge_into(config, user);
        }

        // flag shorthands
        if (seed_flag) config["seed"] = *seed_flag;
        if (!out_dir_flag.empty()) config["out"] = out_dir_flag;
        if (jobs_flag) config["jobs"] = *jobs_flag;
        if (sigma2_flag) config["gaussian"]["sigma2"] = *sigma2_flag;
        if (use_true_labels) config["perturb"]["use_true_labels"] = true;
        if (!tariff_flag.empty()) config["tariff"].push_back(tariff_flag);
        if (!epsilon_list.empty()) {
            json eps = json::array();
            std::stringstream ss(epsilon_list);
            std::string item;
            while (std::getline(ss, item, ',')) {
                try {
                    eps.push_back(std::stod(item));
                } catch (const std::exception&) {
                    throw CliError(kExitUsage, "bad epsilon value '" + item + "'");
                }
            }
            config["perturb"]["epsilon"] = eps;
        }

        // generic dotted overrides: --section.key value
        const std::vector<std::string> extras = app.remaining(true);
        for (std::size_t i = 0; i < extras.size(); ++i) {
            std::string key = extras[i];
            if (key.rfind("--", 0) != 0 || i + 1 >= extras.size())
                throw CliError(kExitUsage, "unrecognized argument: " + key);
            key = key.substr(2);
            std::string pointer = "/" + key;
            for (auto& c : pointer)
                if (c == '.') c = '/';
            const std::string& value = extras[++i];
            json parsed;
            try {
                parsed = json::parse(value);
            } catch (const json::exception&) {
                parsed = value;  // unquoted strings pass through
            }
            try {
                config[json::json_pointer(pointer)] = parsed;
            } catch (const json::exception& e) {
                throw CliError(kExitUsage, "bad override --" + key + ": " + e.what());
            }
        }

        resolve_seeds(config);

        const fs::path out_dir = config.at("out").get<std::string>();
        std::error_code ec;
        fs::create_directories(out_dir, ec);
        if (ec) throw CliError(kExitData, "cannot create output directory " + out_dir.string());

        if (app.got_subcommand("synth")) return cmd_synth(config, out_dir);
        if (app.got_subcommand("train")) return cmd_train(config, out_dir);
        if (app.got_subcommand("sweep")) return cmd_sweep(config, out_dir);
        if (app.got_subcommand("compare")) return cmd_compare(config, out_dir);
        if (app.got_subcommand("bill")) return cmd_bill(config, out_dir);
        if (app.got_subcommand("gradcheck")) return cmd_gradcheck(config);
        throw CliError(kExitUsage, "no subcommand");
    } catch (const CliError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return e.code();
    } catch (const json::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitUsage;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitNumeric;
    }
}
