#pragma once

#include <array>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include <json.hpp>

namespace forgescore {

constexpr std::size_t kClassCount = 4;

using Confusion = std::array<std::array<long, kClassCount>, kClassCount>;  // [true][pred]
using ProbRow = std::array<double, kClassCount>;

double accuracy(std::span<const int> preds, std::span<const int> labels);
Confusion confusion(std::span<const int> preds, std::span<const int> labels);
std::array<double, kClassCount> f1_per_class(const Confusion& m);

// Binary ROC-AUC by the rank statistic (tied scores count 1/2). nullopt when a side is empty.
std::optional<double> roc_auc(std::span<const double> scores, const std::vector<bool>& positive);

// Macro one-vs-rest AUC over classes with both positives and negatives; skipped classes are noted in *warnings.
// NaN when no class qualifies.
double macro_ovr_auc(std::span<const ProbRow> probabilities, std::span<const int> labels,
                     std::vector<std::string>* warnings = nullptr);

// {0,1,2} -> 1 (fake), {3} -> 0 (real).
int binary_map(int code);
std::vector<int> binary_map(std::span<const int> codes);
double fake_probability(const ProbRow& p);

struct EvalReport {
    double acc = 0.0;
    double macro_ovr_auc = 0.0;
    Confusion confusion{};
    std::array<double, kClassCount> f1_per_class{};
    double binary_acc = 0.0;
    double binary_auc = 0.0;
    std::size_t n_samples = 0;
    std::vector<std::string> warnings;
};

EvalReport evaluate(std::span<const int> preds, std::span<const int> labels, std::span<const ProbRow> probabilities,
                    bool require_normalized = true);

nlohmann::json to_json(const EvalReport& r);
std::string confusion_csv(const Confusion& m);

}  // namespace forgescore
