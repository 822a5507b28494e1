#include "forgescore/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <sstream>

#include "forgescore/error.hpp"
#include "forgescore/labels.hpp"

namespace forgescore {

namespace {

void check_inputs(std::span<const int> preds, std::span<const int> labels)
{
    if (labels.empty()) throw data_error("metrics: empty input");
    if (preds.size() != labels.size()) throw data_error("metrics: predictions and labels differ in length");
    for (std::size_t i = 0; i < labels.size(); ++i) {
        if (labels[i] < 0 || labels[i] > 3 || preds[i] < 0 || preds[i] > 3) {
            throw data_error("metrics: class code out of range at sample " + std::to_string(i));
        }
    }
}

}  // namespace

double accuracy(std::span<const int> preds, std::span<const int> labels)
{
    if (labels.empty()) throw data_error("metrics: empty input");
    if (preds.size() != labels.size()) throw data_error("metrics: predictions and labels differ in length");
    std::size_t hits = 0;
    for (std::size_t i = 0; i < labels.size(); ++i) hits += preds[i] == labels[i] ? 1 : 0;
    return static_cast<double>(hits) / static_cast<double>(labels.size());
}

Confusion confusion(std::span<const int> preds, std::span<const int> labels)
{
    check_inputs(preds, labels);
    Confusion m{};
    for (std::size_t i = 0; i < labels.size(); ++i) ++m[static_cast<std::size_t>(labels[i])][static_cast<std::size_t>(preds[i])];
    return m;
}

std::array<double, kClassCount> f1_per_class(const Confusion& m)
{
    std::array<double, kClassCount> f1{};
    for (std::size_t c = 0; c < kClassCount; ++c) {
        long tp = m[c][c];
        long fp = 0, fn = 0;
        for (std::size_t o = 0; o < kClassCount; ++o) {
            if (o == c) continue;
            fp += m[o][c];
            fn += m[c][o];
        }
        double precision = tp + fp > 0 ? static_cast<double>(tp) / static_cast<double>(tp + fp) : 0.0;
        double recall = tp + fn > 0 ? static_cast<double>(tp) / static_cast<double>(tp + fn) : 0.0;
        f1[c] = precision + recall > 0.0 ? 2.0 * precision * recall / (precision + recall) : 0.0;
    }
    return f1;
}

std::optional<double> roc_auc(std::span<const double> scores, const std::vector<bool>& positive)
{
    if (scores.size() != positive.size()) throw data_error("roc_auc: length mismatch");
    const std::size_t n = scores.size();
    std::vector<std::size_t> order(n);
    std::iota(order.begin(), order.end(), std::size_t{0});
    std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return scores[a] < scores[b]; });

    // Midranks: a tied block of size k starting at rank i+1 shares rank i + (k+1)/2.
    double pos_rank_sum = 0.0;
    std::size_t n_pos = 0;
    for (std::size_t i = 0; i < n;) {
        std::size_t j = i;
        while (j < n && scores[order[j]] == scores[order[i]]) ++j;
        double midrank = static_cast<double>(i + j + 1) / 2.0;
        for (std::size_t k = i; k < j; ++k) {
            if (positive[order[k]]) {
                pos_rank_sum += midrank;
                ++n_pos;
            }
        }
        i = j;
    }
    const std::size_t n_neg = n - n_pos;
    if (n_pos == 0 || n_neg == 0) return std::nullopt;
    const double p = static_cast<double>(n_pos);
    return (pos_rank_sum - p * (p + 1.0) / 2.0) / (p * static_cast<double>(n_neg));
}

double macro_ovr_auc(std::span<const ProbRow> probabilities, std::span<const int> labels, std::vector<std::string>* warnings)
{
    if (probabilities.size() != labels.size()) throw data_error("macro_ovr_auc: length mismatch");
    if (labels.empty()) throw data_error("macro_ovr_auc: empty input");
    double sum = 0.0;
    std::size_t used = 0;
    std::vector<double> column(labels.size());
    for (std::size_t c = 0; c < kClassCount; ++c) {
        std::vector<bool> pos(labels.size());
        for (std::size_t i = 0; i < labels.size(); ++i) {
            column[i] = probabilities[i][c];
            pos[i] = labels[i] == static_cast<int>(c);
        }
        auto auc = roc_auc(column, pos);
        if (!auc) {
            if (warnings) {
                warnings->push_back(std::string("AUC: class ") + std::to_string(c) + " (" +
                                    label_name(static_cast<ForgeryLabel>(c)) + ") has no positives or no negatives; skipped");
            }
            continue;
        }
        sum += *auc;
        ++used;
    }
    if (used == 0) {
        if (warnings) warnings->push_back("macro AUC undefined: no class has both positives and negatives");
        return std::nan("");
    }
    return sum / static_cast<double>(used);
}

int binary_map(int c)
{
    if (c < 0 || c > 3) throw data_error("binary_map: class code out of range: " + std::to_string(c));
    return c == 3 ? 0 : 1;
}

std::vector<int> binary_map(std::span<const int> codes)
{
    std::vector<int> out;
    out.reserve(codes.size());
    for (int c : codes) out.push_back(binary_map(c));
    return out;
}

double fake_probability(const ProbRow& p) { return p[0] + p[1] + p[2]; }

EvalReport evaluate(std::span<const int> preds, std::span<const int> labels, std::span<const ProbRow> probabilities,
                    bool require_normalized)
{
    check_inputs(preds, labels);
    if (probabilities.size() != labels.size()) throw data_error("evaluate: probabilities and labels differ in length");
    if (require_normalized) {
        for (std::size_t i = 0; i < probabilities.size(); ++i) {
            double s = probabilities[i][0] + probabilities[i][1] + probabilities[i][2] + probabilities[i][3];
            if (std::abs(s - 1.0) > 1e-6) throw data_error("evaluate: probability row " + std::to_string(i) + " does not sum to 1");
        }
    }
    EvalReport r;
    r.n_samples = labels.size();
    r.acc = accuracy(preds, labels);
    r.confusion = confusion(preds, labels);
    r.f1_per_class = f1_per_class(r.confusion);
    r.macro_ovr_auc = macro_ovr_auc(probabilities, labels, &r.warnings);

    auto bp = binary_map(preds);
    auto bl = binary_map(labels);
    r.binary_acc = accuracy(bp, bl);
    std::vector<double> p_fake(labels.size());
    std::vector<bool> is_fake(labels.size());
    for (std::size_t i = 0; i < labels.size(); ++i) {
        p_fake[i] = fake_probability(probabilities[i]);
        is_fake[i] = bl[i] == 1;
    }
    auto bauc = roc_auc(p_fake, is_fake);
    if (bauc) {
        r.binary_auc = *bauc;
    } else {
        r.binary_auc = std::nan("");
        r.warnings.push_back("binary AUC undefined: only one of real/fake present");
    }
    return r;
}

nlohmann::json to_json(const EvalReport& r)
{
    nlohmann::json confusion = nlohmann::json::array();
    for (const auto& row : r.confusion) confusion.push_back(row);
    auto num = [](double v) { return std::isfinite(v) ? nlohmann::json(v) : nlohmann::json(nullptr); };
    return {{"acc", r.acc},
            {"macro_ovr_auc", num(r.macro_ovr_auc)},
            {"confusion", confusion},
            {"f1_per_class", r.f1_per_class},
            {"binary_acc", r.binary_acc},
            {"binary_auc", num(r.binary_auc)},
            {"n_samples", r.n_samples},
            {"warnings", r.warnings}};
}

std::string confusion_csv(const Confusion& m)
{
    std::ostringstream os;
    os << "true\\pred,spatial,appearance,motion,real\n";
    for (std::size_t t = 0; t < kClassCount; ++t) {
        os << label_name(static_cast<ForgeryLabel>(t));
        for (std::size_t p = 0; p < kClassCount; ++p) os << "," << m[t][p];
        os << "\n";
    }
    return os.str();
}

}  // namespace forgescore
