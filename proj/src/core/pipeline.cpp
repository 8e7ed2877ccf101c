#include "core/pipeline.hpp"

#include <fstream>
#include <sstream>

#include <nlohmann/json.hpp>

#include "core/errors.hpp"

namespace amloda {

std::size_t test_start_sample(const AttackConfig& cfg, std::size_t n_samples) {
    if (n_samples < cfg.window_len) throw DataError("trace shorter than one window");
    const std::size_t n_windows = (n_samples - cfg.window_len) / cfg.train_stride + 1;
    const std::size_t n_train =
        static_cast<std::size_t>(static_cast<double>(n_windows) * cfg.train_fraction);
    if (n_train == 0 || n_train == n_windows)
        throw DataError("train/test split would leave an empty side");
    return n_train * cfg.train_stride;
}

namespace {

EvalReport evaluate_range(const LstmModel& model, const std::vector<double>& normalized,
                          const OccupancyLabels& labels, std::size_t window_len,
                          std::size_t stride, std::size_t start_sample) {
    if (normalized.size() < start_sample + window_len)
        throw DataError("evaluation range shorter than one window");
    std::vector<double> scores;
    std::vector<int> predictions;
    std::vector<int> truth;
    for (std::size_t s = start_sample; s + window_len <= normalized.size(); s += stride) {
        const std::span<const double> w(normalized.data() + s, window_len);
        const Prediction p = predict(model, w);
        scores.push_back(p.probability);
        predictions.push_back(p.label);
        truth.push_back(labels.values[s + window_len - 1]);
    }
    return evaluate(scores, predictions, truth);
}

}  // namespace

TrainOutcome train_attack(const PowerTrace& trace, const OccupancyLabels& labels,
                          const TrainConfig& train_cfg, const AttackConfig& attack_cfg) {
    if (labels.size() != trace.size())
        throw InvalidArgumentError("labels length does not match trace");
    if (trace.has_missing())
        throw InvalidArgumentError("training requires a cleaned trace");

    auto [normalized, norm] = normalize(trace);
    const WindowedDataset all =
        make_windows(normalized, labels, attack_cfg.window_len, attack_cfg.train_stride);
    auto [train_set, test_set] = split_train_test(all, attack_cfg.train_fraction);
    (void)test_set;  // metrics use the stride-1 evaluation below instead

    TrainOutcome outcome{
        TrainedAttack{LstmModel::seeded(train_cfg.hidden_size, train_cfg.seed), norm, attack_cfg,
                      train_cfg},
        {},
        {}};
    outcome.loss_history = train(outcome.attack.model, train_set, train_cfg).loss_history;
    outcome.test_report =
        evaluate_range(outcome.attack.model, normalized, labels, attack_cfg.window_len,
                       attack_cfg.eval_stride, test_start_sample(attack_cfg, trace.size()));
    return outcome;
}

EvalReport evaluate_attack(const TrainedAttack& attack, const PowerTrace& trace,
                           const OccupancyLabels& labels, EvalSplit split) {
    if (labels.size() != trace.size())
        throw InvalidArgumentError("labels length does not match trace");
    if (trace.has_missing()) throw InvalidArgumentError("evaluation requires a cleaned trace");
    const std::vector<double> normalized = normalize_with(trace, attack.norm);
    const std::size_t start =
        split == EvalSplit::kTestTail ? test_start_sample(attack.attack, trace.size()) : 0;
    return evaluate_range(attack.model, normalized, labels, attack.attack.window_len,
                          attack.attack.eval_stride, start);
}

std::string checkpoint_to_json(const TrainedAttack& attack) {
    nlohmann::json doc = nlohmann::json::parse(model_to_json(attack.model, attack.train_cfg));
    doc["normalization"] = {{"min_w", attack.norm.min_w}, {"max_w", attack.norm.max_w}};
    doc["windowing"] = {{"window_len", attack.attack.window_len},
                        {"train_stride", attack.attack.train_stride},
                        {"eval_stride", attack.attack.eval_stride},
                        {"train_fraction", attack.attack.train_fraction}};
    return doc.dump(2);
}

TrainedAttack checkpoint_from_json(const std::string& json_text) {
    auto [model, train_cfg] = model_from_json(json_text);
    nlohmann::json doc;
    try {
        doc = nlohmann::json::parse(json_text);
        NormParams norm{doc.at("normalization").at("min_w").get<double>(),
                        doc.at("normalization").at("max_w").get<double>()};
        const nlohmann::json& w = doc.at("windowing");
        AttackConfig attack{w.at("window_len").get<std::size_t>(),
                            w.at("train_stride").get<std::size_t>(),
                            w.at("eval_stride").get<std::size_t>(),
                            w.at("train_fraction").get<double>()};
        if (norm.max_w < norm.min_w) throw DataError("checkpoint normalization has max < min");
        return TrainedAttack{std::move(model), norm, attack, train_cfg};
    } catch (const nlohmann::json::exception& e) {
        throw ParseError(std::string("checkpoint JSON missing fields: ") + e.what());
    }
}

void save_checkpoint(const TrainedAttack& attack, const std::string& path) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw IoError("cannot write checkpoint: " + path);
    out << checkpoint_to_json(attack) << '\n';
    if (!out) throw IoError("write failed: " + path);
}

TrainedAttack load_checkpoint(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw IoError("cannot open checkpoint: " + path);
    std::stringstream buf;
    buf << in.rdbuf();
    return checkpoint_from_json(buf.str());
}

}  // namespace amloda
