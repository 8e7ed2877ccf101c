#include "amloda/amloda.h"

#include <cstdlib>
#include <cstring>
#include <new>
#include <random>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "core/billing.hpp"
#include "core/errors.hpp"
#include "core/gaussian.hpp"
#include "core/lstm.hpp"
#include "core/perturb.hpp"
#include "core/pipeline.hpp"
#include "core/synth.hpp"
#include "core/trace.hpp"

using nlohmann::json;

struct amloda_trace {
    amloda::PowerTrace t;
};
struct amloda_labels {
    amloda::OccupancyLabels l;
};
struct amloda_model {
    amloda::TrainedAttack a;
};
struct amloda_tariff {
    amloda::Tariff t;
};

namespace {

thread_local std::string g_last_error;

char* dup_string(const std::string& s) {
    char* out = static_cast<char*>(std::malloc(s.size() + 1));
    if (!out) throw std::bad_alloc();
    std::memcpy(out, s.c_str(), s.size() + 1);
    return out;
}

template <typename Fn>
amloda_status wrap(Fn&& fn) {
    try {
        fn();
        g_last_error.clear();
        return AMLODA_OK;
    } catch (const amloda::InvalidArgumentError& e) {
        g_last_error = e.what();
        return AMLODA_ERR_INVALID_ARGUMENT;
    } catch (const amloda::IoError& e) {
        g_last_error = e.what();
        return AMLODA_ERR_IO;
    } catch (const amloda::ParseError& e) {
        g_last_error = e.what();
        return AMLODA_ERR_PARSE;
    } catch (const amloda::DataError& e) {
        g_last_error = e.what();
        return AMLODA_ERR_DATA;
    } catch (const amloda::NumericError& e) {
        g_last_error = e.what();
        return AMLODA_ERR_NUMERIC;
    } catch (const std::exception& e) {
        g_last_error = e.what();
        return AMLODA_ERR_INTERNAL;
    } catch (...) {
        g_last_error = "unknown error";
        return AMLODA_ERR_INTERNAL;
    }
}

void require(bool ok, const char* what) {
    if (!ok) throw amloda::InvalidArgumentError(what);
}

json parse_config(const char* text, const char* what) {
    if (!text || !*text) return json::object();
    try {
        json doc = json::parse(text);
        if (!doc.is_object()) throw amloda::ParseError(std::string(what) + ": expected a JSON object");
        return doc;
    } catch (const json::exception& e) {
        throw amloda::ParseError(std::string(what) + ": " + e.what());
    }
}

amloda::SynthConfig synth_config_from_json(const json& doc) {
    amloda::SynthConfig cfg;
    cfg.day_count = doc.value("day_count", cfg.day_count);
    cfg.base_load_w = doc.value("base_load_w", cfg.base_load_w);
    cfg.appliance_burst_w = doc.value("appliance_burst_w", cfg.appliance_burst_w);
    cfg.background_spike_w = doc.value("background_spike_w", cfg.background_spike_w);
    cfg.noise_std_w = doc.value("noise_std_w", cfg.noise_std_w);
    cfg.sample_period_s = doc.value("sample_period_s", cfg.sample_period_s);
    cfg.seed = doc.value("seed", cfg.seed);
    if (doc.contains("occupied_intervals")) {
        for (const auto& iv : doc.at("occupied_intervals")) {
            if (!iv.is_array() || iv.size() != 2)
                throw amloda::ParseError("occupied_intervals entries must be [start, end]");
            auto bound = [](const json& v) {
                return v.is_string() ? amloda::parse_clock_time(v.get<std::string>())
                                     : v.get<int>();
            };
            cfg.occupied_intervals.emplace_back(bound(iv[0]), bound(iv[1]));
        }
    }
    return cfg;
}

std::pair<amloda::TrainConfig, amloda::AttackConfig> train_config_from_json(const json& doc) {
    amloda::TrainConfig t;
    t.epochs = doc.value("epochs", t.epochs);
    t.learning_rate = doc.value("learning_rate", t.learning_rate);
    t.batch_size = doc.value("batch_size", t.batch_size);
    t.seed = doc.value("seed", t.seed);
    t.hidden_size = doc.value("hidden_size", t.hidden_size);
    amloda::AttackConfig a;
    a.window_len = doc.value("window_len", a.window_len);
    a.train_stride = doc.value("train_stride", a.window_len);
    a.eval_stride = doc.value("eval_stride", a.eval_stride);
    a.train_fraction = doc.value("train_fraction", a.train_fraction);
    return {t, a};
}

amloda::PerturbConfig perturb_config_from_json(const json& doc, std::size_t window_len) {
    amloda::PerturbConfig cfg;
    cfg.window_len = window_len;
    cfg.epsilon = doc.value("epsilon", cfg.epsilon);
    if (doc.contains("gamma") && !doc.at("gamma").is_null())
        cfg.gamma = doc.at("gamma").get<double>();
    cfg.pair_period = doc.value("pair_period", cfg.pair_period);
    cfg.use_true_labels = doc.value("use_true_labels", cfg.use_true_labels);
    return cfg;
}

}  // namespace

extern "C" {

const char* amloda_version(void) { return "1.0.0"; }

const char* amloda_last_error(void) { return g_last_error.c_str(); }

void amloda_string_free(char* s) { std::free(s); }

amloda_status amloda_trace_create(const double* watts, size_t count, int64_t start_time,
                                  double sample_period_s, amloda_trace** out) {
    return wrap([&] {
        require(watts && out && count > 0, "watts, count and out are required");
        require(sample_period_s > 0, "sample_period_s must be > 0");
        for (size_t i = 0; i < count; ++i)
            if (watts[i] < 0)
                throw amloda::InvalidArgumentError("power values must be >= 0");
        auto* handle = new amloda_trace;
        handle->t.start_time = start_time;
        handle->t.sample_period_s = sample_period_s;
        handle->t.values_w.assign(watts, watts + count);
        *out = handle;
    });
}

amloda_status amloda_trace_load_csv(const char* path, amloda_trace** out_trace,
                                    amloda_labels** out_labels) {
    return wrap([&] {
        require(path && out_trace, "path and out_trace are required");
        amloda::LoadResult result = amloda::load_eco_csv(path);
        *out_trace = new amloda_trace{std::move(result.trace)};
        if (out_labels)
            *out_labels = result.has_labels ? new amloda_labels{std::move(result.labels)} : nullptr;
    });
}

amloda_status amloda_trace_save_csv(const amloda_trace* trace, const amloda_labels* labels,
                                    const char* path) {
    return wrap([&] {
        require(trace && path, "trace and path are required");
        amloda::save_trace_csv(trace->t, labels ? &labels->l : nullptr, path);
    });
}

size_t amloda_trace_len(const amloda_trace* trace) { return trace ? trace->t.size() : 0; }

amloda_status amloda_trace_copy_values(const amloda_trace* trace, double* buf, size_t buflen) {
    return wrap([&] {
        require(trace && buf, "trace and buf are required");
        require(buflen >= trace->t.size(), "buffer too small");
        std::memcpy(buf, trace->t.values_w.data(), trace->t.size() * sizeof(double));
    });
}

amloda_status amloda_trace_total(const amloda_trace* trace, double* out_total) {
    return wrap([&] {
        require(trace && out_total, "trace and out_total are required");
        *out_total = trace->t.total();
    });
}

void amloda_trace_free(amloda_trace* trace) { delete trace; }

amloda_status amloda_labels_create(const uint8_t* values, size_t count, amloda_labels** out) {
    return wrap([&] {
        require(values && out && count > 0, "values, count and out are required");
        for (size_t i = 0; i < count; ++i)
            if (values[i] > 1) throw amloda::InvalidArgumentError("labels must be 0 or 1");
        auto* handle = new amloda_labels;
        handle->l.values.assign(values, values + count);
        *out = handle;
    });
}

size_t amloda_labels_len(const amloda_labels* labels) { return labels ? labels->l.size() : 0; }

amloda_status amloda_labels_copy_values(const amloda_labels* labels, uint8_t* buf, size_t buflen) {
    return wrap([&] {
        require(labels && buf, "labels and buf are required");
        require(buflen >= labels->l.size(), "buffer too small");
        std::memcpy(buf, labels->l.values.data(), labels->l.size());
    });
}

void amloda_labels_free(amloda_labels* labels) { delete labels; }

amloda_status amloda_clean_missing(const amloda_trace* trace, const amloda_labels* labels,
                                   amloda_trace** out_trace, amloda_labels** out_labels,
                                   char** report_json) {
    return wrap([&] {
        require(trace && out_trace, "trace and out_trace are required");
        amloda::CleanResult result =
            amloda::clean_missing(trace->t, labels ? &labels->l : nullptr);
        *out_trace = new amloda_trace{std::move(result.trace)};
        if (out_labels)
            *out_labels = labels ? new amloda_labels{std::move(result.labels)} : nullptr;
        if (report_json) *report_json = dup_string(result.report.to_json());
    });
}

amloda_status amloda_synth_household(const char* config_json, amloda_trace** out_trace,
                                     amloda_labels** out_labels) {
    return wrap([&] {
        require(out_trace && out_labels, "out_trace and out_labels are required");
        const amloda::SynthConfig cfg =
            synth_config_from_json(parse_config(config_json, "synth config"));
        amloda::SynthResult result = amloda::synth_household(cfg);
        *out_trace = new amloda_trace{std::move(result.trace)};
        *out_labels = new amloda_labels{std::move(result.labels)};
    });
}

amloda_status amloda_train(const amloda_trace* trace, const amloda_labels* labels,
                           const char* config_json, amloda_model** out_model,
                           char** train_report_json) {
    return wrap([&] {
        require(trace && labels && out_model, "trace, labels and out_model are required");
        auto [train_cfg, attack_cfg] =
            train_config_from_json(parse_config(config_json, "train config"));
        amloda::TrainOutcome outcome =
            amloda::train_attack(trace->t, labels->l, train_cfg, attack_cfg);
        if (train_report_json) {
            json report;
            report["loss_history"] = outcome.loss_history;
            report["test_eval"] = json::parse(outcome.test_report.to_json());
            *train_report_json = dup_string(report.dump());
        }
        *out_model = new amloda_model{std::move(outcome.attack)};
    });
}

amloda_status amloda_model_save(const amloda_model* model, const char* path) {
    return wrap([&] {
        require(model && path, "model and path are required");
        amloda::save_checkpoint(model->a, path);
    });
}

amloda_status amloda_model_load(const char* path, amloda_model** out) {
    return wrap([&] {
        require(path && out, "path and out are required");
        *out = new amloda_model{amloda::load_checkpoint(path)};
    });
}

amloda_status amloda_model_info(const amloda_model* model, char** info_json) {
    return wrap([&] {
        require(model && info_json, "model and info_json are required");
        json doc;
        doc["hidden_size"] = model->a.model.hidden_size();
        doc["param_count"] = model->a.model.param_count();
        doc["window_len"] = model->a.attack.window_len;
        doc["train_stride"] = model->a.attack.train_stride;
        doc["eval_stride"] = model->a.attack.eval_stride;
        doc["train_fraction"] = model->a.attack.train_fraction;
        doc["normalization"] = {{"min_w", model->a.norm.min_w}, {"max_w", model->a.norm.max_w}};
        *info_json = dup_string(doc.dump());
    });
}

void amloda_model_free(amloda_model* model) { delete model; }

amloda_status amloda_model_evaluate(const amloda_model* model, const amloda_trace* trace,
                                    const amloda_labels* labels, const char* options_json,
                                    char** report_json) {
    return wrap([&] {
        require(model && trace && labels && report_json,
                "model, trace, labels and report_json are required");
        const json options = parse_config(options_json, "evaluate options");
        const std::string split = options.value("split", "test");
        if (split != "test" && split != "all")
            throw amloda::InvalidArgumentError("split must be \"test\" or \"all\"");
        const amloda::EvalReport report = amloda::evaluate_attack(
            model->a, trace->t, labels->l,
            split == "test" ? amloda::EvalSplit::kTestTail : amloda::EvalSplit::kAll);
        *report_json = dup_string(report.to_json());
    });
}

amloda_status amloda_generate_oblivious(const amloda_model* model, const amloda_trace* trace,
                                        const amloda_labels* labels, const char* config_json,
                                        amloda_trace** out_trace, char** report_json) {
    return wrap([&] {
        require(model && trace && out_trace, "model, trace and out_trace are required");
        const amloda::PerturbConfig cfg = perturb_config_from_json(
            parse_config(config_json, "perturb config"), model->a.attack.window_len);
        amloda::ObliviousResult result = amloda::generate_oblivious_trace(
            model->a.model, trace->t, labels ? &labels->l : nullptr, model->a.norm, cfg);
        *out_trace = new amloda_trace{std::move(result.perturbed.trace)};
        if (report_json) *report_json = dup_string(result.report.to_json());
    });
}

amloda_status amloda_gaussian_perturb(const amloda_trace* trace, const char* config_json,
                                      amloda_trace** out_trace, char** report_json) {
    return wrap([&] {
        require(trace && out_trace, "trace and out_trace are required");
        const json doc = parse_config(config_json, "gaussian config");
        amloda::GaussianConfig cfg;
        cfg.sigma2 = doc.value("sigma2", cfg.sigma2);
        cfg.seed = doc.value("seed", cfg.seed);
        amloda::GaussianResult result = amloda::gaussian_perturb(trace->t, cfg);
        *out_trace = new amloda_trace{std::move(result.perturbed.trace)};
        if (report_json) *report_json = dup_string(result.report.to_json());
    });
}

amloda_status amloda_match_distortion(const amloda_trace* original, const amloda_trace* perturbed,
                                      double* out_sigma2) {
    return wrap([&] {
        require(original && perturbed && out_sigma2,
                "original, perturbed and out_sigma2 are required");
        amloda::PerturbedTrace wrapped;
        wrapped.trace = perturbed->t;
        *out_sigma2 = amloda::match_distortion(wrapped, original->t);
    });
}

amloda_status amloda_tariff_parse(const char* json_text, amloda_tariff** out) {
    return wrap([&] {
        require(json_text && out, "json and out are required");
        *out = new amloda_tariff{amloda::tariff_from_json(json_text)};
    });
}

amloda_status amloda_tariff_load(const char* path, amloda_tariff** out) {
    return wrap([&] {
        require(path && out, "path and out are required");
        *out = new amloda_tariff{amloda::load_tariff(path)};
    });
}

amloda_status amloda_tariff_bill(const amloda_tariff* tariff, const amloda_trace* trace,
                                 int pad_zero, double* out_bill) {
    return wrap([&] {
        require(tariff && trace && out_bill, "tariff, trace and out_bill are required");
        *out_bill = amloda::bill_trace(tariff->t, trace->t, pad_zero != 0);
    });
}

amloda_status amloda_billing_invariance(const amloda_tariff* tariff, const amloda_trace* original,
                                        const amloda_trace* perturbed, int pad_zero,
                                        char** report_json) {
    return wrap([&] {
        require(tariff && original && perturbed && report_json,
                "tariff, traces and report_json are required");
        const amloda::InvarianceReport report = amloda::billing_invariance_check(
            original->t, perturbed->t, tariff->t, pad_zero != 0);
        *report_json = dup_string(report.to_json());
    });
}

void amloda_tariff_free(amloda_tariff* tariff) { delete tariff; }

amloda_status amloda_grad_check(const char* config_json, char** report_json) {
    return wrap([&] {
        require(report_json, "report_json is required");
        const json doc = parse_config(config_json, "grad check config");
        const int trials = doc.value("trials", 50);
        const int max_hidden = doc.value("max_hidden", 4);
        const int max_window = doc.value("max_window", 8);
        const std::uint64_t seed = doc.value("seed", std::uint64_t{1});
        require(trials > 0 && max_hidden > 0 && max_window > 0,
                "trials, max_hidden and max_window must be > 0");

        std::mt19937_64 rng(seed);
        std::uniform_int_distribution<int> hidden_dist(1, max_hidden);
        std::uniform_int_distribution<int> window_dist(2, std::max(2, max_window));
        std::uniform_int_distribution<int> label_dist(0, 1);
        std::uniform_real_distribution<double> value_dist(0.0, 1.0);

        amloda::GradCheckResult worst;
        for (int trial = 0; trial < trials; ++trial) {
            const amloda::LstmModel model = amloda::LstmModel::seeded(hidden_dist(rng), rng());
            std::vector<double> window(window_dist(rng));
            for (double& v : window) v = value_dist(rng);
            const amloda::GradCheckResult r =
                amloda::grad_check(model, window, label_dist(rng));
            if (r.max_rel_error > worst.max_rel_error) worst = r;
        }
        json report;
        report["trials"] = trials;
        report["max_rel_error"] = worst.max_rel_error;
        report["worst_coordinate"] = worst.worst_coordinate;
        *report_json = dup_string(report.dump());
    });
}

}  // extern "C"
