#include "forgescore/labels.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <set>

#include "forgescore/error.hpp"
#include "forgescore/rng.hpp"

namespace forgescore {

using nlohmann::json;

const char* label_name(ForgeryLabel l)
{
    switch (l) {
    case ForgeryLabel::spatial: return "spatial";
    case ForgeryLabel::appearance: return "appearance";
    case ForgeryLabel::motion: return "motion";
    case ForgeryLabel::real: return "real";
    }
    return "?";
}

ForgeryLabel label_from_code(int c)
{
    if (c < 0 || c > 3) throw data_error("label code out of range: " + std::to_string(c));
    return static_cast<ForgeryLabel>(c);
}

double AnomalyScores::get(ForgeryLabel type) const
{
    switch (type) {
    case ForgeryLabel::spatial: return spatial;
    case ForgeryLabel::appearance: return appearance;
    case ForgeryLabel::motion: return motion;
    case ForgeryLabel::real: break;
    }
    throw data_error("real is not an anomaly type");
}

int Ranks::get(ForgeryLabel type) const
{
    switch (type) {
    case ForgeryLabel::spatial: return spatial;
    case ForgeryLabel::appearance: return appearance;
    case ForgeryLabel::motion: return motion;
    case ForgeryLabel::real: break;
    }
    throw data_error("real is not an anomaly type");
}

std::map<std::string, int> rank_descending(const std::vector<std::pair<std::string, double>>& scores)
{
    auto order = scores;
    for (const auto& [id, s] : order) {
        if (!std::isfinite(s)) throw data_error("video " + id + ": non-finite anomaly score");
    }
    std::sort(order.begin(), order.end(), [](const auto& a, const auto& b) {
        if (a.second != b.second) return a.second > b.second;
        return a.first < b.first;
    });
    std::map<std::string, int> ranks;
    for (std::size_t i = 0; i < order.size(); ++i) {
        if (!ranks.emplace(order[i].first, static_cast<int>(i) + 1).second) {
            throw data_error("duplicate video_id in ranking: " + order[i].first);
        }
    }
    return ranks;
}

RankTable rank_cohort(const std::map<std::string, AnomalyScores>& scores)
{
    if (scores.empty()) throw data_error("rank_cohort: empty cohort");
    RankTable table;
    for (auto type : kAnomalyClasses) {
        std::vector<std::pair<std::string, double>> column;
        column.reserve(scores.size());
        for (const auto& [id, s] : scores) column.emplace_back(id, s.get(type));
        for (const auto& [id, r] : rank_descending(column)) {
            auto& entry = table[id];
            switch (type) {
            case ForgeryLabel::spatial: entry.spatial = r; break;
            case ForgeryLabel::appearance: entry.appearance = r; break;
            default: entry.motion = r; break;
            }
        }
    }
    return table;
}

ForgeryLabel assign_label(const Ranks& r)
{
    ForgeryLabel best = ForgeryLabel::spatial;
    int best_rank = r.spatial;
    if (r.appearance < best_rank) {
        best = ForgeryLabel::appearance;
        best_rank = r.appearance;
    }
    if (r.motion < best_rank) best = ForgeryLabel::motion;
    return best;
}

std::map<std::string, ForgeryLabel> assign_labels(const RankTable& ranks)
{
    std::map<std::string, ForgeryLabel> out;
    for (const auto& [id, r] : ranks) out.emplace(id, assign_label(r));
    return out;
}

Confidence confidence_weight(int rank, int class_size, ConfidenceOrientation orientation)
{
    if (class_size < 1 || rank < 1 || rank > class_size) {
        throw data_error("confidence rank " + std::to_string(rank) + " outside [1, " + std::to_string(class_size) + "]");
    }
    int r = orientation == ConfidenceOrientation::verbatim ? rank : class_size - rank + 1;
    Confidence c;
    c.r_hat = static_cast<double>(r) / static_cast<double>(class_size);
    c.alpha = std::log(std::numbers::e + c.r_hat);
    return c;
}

std::vector<Confidence> confidence_weights(const std::vector<int>& ranks, int class_size,
                                           ConfidenceOrientation orientation)
{
    std::vector<Confidence> out;
    out.reserve(ranks.size());
    for (int r : ranks) out.push_back(confidence_weight(r, class_size, orientation));
    return out;
}

std::vector<LabeledVideo> label_cohort(const std::vector<ScoredVideo>& videos, ConfidenceOrientation orientation)
{
    std::map<std::string, AnomalyScores> fakes;
    std::vector<LabeledVideo> out;
    std::set<std::string> seen;
    for (const auto& v : videos) {
        if (!seen.insert(v.video_id).second) throw data_error("duplicate video_id '" + v.video_id + "'");
        LabeledVideo lv;
        lv.video_id = v.video_id;
        lv.is_real = v.is_real;
        lv.scores = v.scores;
        lv.planted_label = v.planted_label;
        if (!v.is_real) fakes.emplace(v.video_id, v.scores);
        out.push_back(std::move(lv));
    }
    std::sort(out.begin(), out.end(), [](const auto& a, const auto& b) { return a.video_id < b.video_id; });
    if (fakes.empty()) return out;

    auto table = rank_cohort(fakes);
    std::map<ForgeryLabel, std::vector<std::pair<std::string, double>>> members;
    for (auto& lv : out) {
        if (lv.is_real) continue;
        lv.ranks = table.at(lv.video_id);
        lv.label = assign_label(lv.ranks);
        members[lv.label].emplace_back(lv.video_id, lv.scores.get(lv.label));
    }
    std::map<std::string, std::pair<int, int>> within;  // id -> (rank, class size)
    for (const auto& [label, column] : members) {
        auto n = static_cast<int>(column.size());
        for (const auto& [id, r] : rank_descending(column)) within[id] = {r, n};
    }
    for (auto& lv : out) {
        if (lv.is_real) continue;
        auto [r, n] = within.at(lv.video_id);
        lv.within_class_rank = r;
        lv.class_size = n;
        auto c = confidence_weight(r, n, orientation);
        lv.r_hat = c.r_hat;
        lv.alpha = c.alpha;
    }
    return out;
}

std::size_t review_quota(std::size_t class_size) { return (class_size + 4) / 5; }

std::vector<std::string> review_candidates(const std::vector<LabeledVideo>& cohort)
{
    std::vector<std::string> out;
    for (const auto& v : cohort) {
        if (v.is_real || v.within_class_rank < 1) continue;
        if (static_cast<std::size_t>(v.within_class_rank) <= review_quota(static_cast<std::size_t>(v.class_size))) {
            out.push_back(v.video_id);
        }
    }
    return out;
}

SplitManifest split_cohort(const std::vector<LabeledVideo>& cohort, std::uint64_t seed, const std::string& cohort_id)
{
    SplitManifest m;
    m.cohort_id = cohort_id;
    m.seed = seed;

    std::vector<std::string> reals;
    for (const auto& v : cohort) {
        if (v.is_real) {
            reals.push_back(v.video_id);
            continue;
        }
        if (v.within_class_rank < 1 || v.class_size < 1) throw data_error("video " + v.video_id + " is not labeled");
        bool candidate = static_cast<std::size_t>(v.within_class_rank) <= review_quota(static_cast<std::size_t>(v.class_size));
        if (!candidate) {
            m.train.push_back(v.video_id);
            m.labels[v.video_id] = v.label;
            continue;
        }
        switch (v.review.status) {
        case ReviewStatus::automatic:
            m.pending_review.push_back(v.video_id);
            m.labels[v.video_id] = v.label;
            break;
        case ReviewStatus::accepted:
        case ReviewStatus::reassigned:
            m.val.push_back(v.video_id);
            m.labels[v.video_id] = v.effective_label();
            break;
        case ReviewStatus::rejected: m.rejected.push_back(v.video_id); break;
        }
        if (v.review.status != ReviewStatus::automatic && !v.review.timestamp.empty()) {
            if (!m.created_at || *m.created_at < v.review.timestamp) m.created_at = v.review.timestamp;
        }
    }

    std::sort(reals.begin(), reals.end());
    auto shuffled = reals;
    Rng rng(seed, "split");
    rng.shuffle(shuffled);
    std::set<std::string> real_val(shuffled.begin(), shuffled.begin() + static_cast<std::ptrdiff_t>(review_quota(reals.size())));
    for (const auto& id : reals) {
        (real_val.count(id) ? m.val : m.train).push_back(id);
        m.labels[id] = ForgeryLabel::real;
    }

    for (auto* list : {&m.train, &m.val, &m.pending_review, &m.rejected}) std::sort(list->begin(), list->end());
    return m;
}

namespace {

const char* status_name(ReviewStatus s)
{
    switch (s) {
    case ReviewStatus::automatic: return "auto";
    case ReviewStatus::accepted: return "accepted";
    case ReviewStatus::reassigned: return "reassigned";
    case ReviewStatus::rejected: return "rejected";
    }
    return "?";
}

ReviewStatus status_from_name(const std::string& s)
{
    if (s == "auto") return ReviewStatus::automatic;
    if (s == "accepted") return ReviewStatus::accepted;
    if (s == "reassigned") return ReviewStatus::reassigned;
    if (s == "rejected") return ReviewStatus::rejected;
    throw data_error("unknown review state '" + s + "'");
}

}  // namespace

json to_json(const AnomalyScores& s)
{
    return {{"spatial", s.spatial}, {"appearance", s.appearance}, {"motion", s.motion}};
}

json to_json(const Ranks& r) { return {{"spatial", r.spatial}, {"appearance", r.appearance}, {"motion", r.motion}}; }

json to_json(const LabeledVideo& v)
{
    json review = {{"state", status_name(v.review.status)}};
    if (v.review.status == ReviewStatus::reassigned) review["label"] = code(v.review.reassigned_to);
    if (!v.review.reviewer.empty()) review["reviewer"] = v.review.reviewer;
    if (!v.review.timestamp.empty()) review["timestamp"] = v.review.timestamp;
    json j = {{"video_id", v.video_id},
              {"is_real", v.is_real},
              {"scores", to_json(v.scores)},
              {"ranks", to_json(v.ranks)},
              {"label", code(v.label)},
              {"within_class_rank", v.within_class_rank},
              {"class_size", v.class_size},
              {"r_hat", v.r_hat},
              {"alpha", v.alpha},
              {"review", review}};
    j["planted_label"] = v.planted_label ? json(*v.planted_label) : json(nullptr);
    return j;
}

json to_json(const SplitManifest& m)
{
    json labels = json::object();
    for (const auto& [id, l] : m.labels) labels[id] = code(l);
    return {{"cohort_id", m.cohort_id},
            {"seed", m.seed},
            {"created_at", m.created_at ? json(*m.created_at) : json(nullptr)},
            {"train", m.train},
            {"val", m.val},
            {"pending_review", m.pending_review},
            {"rejected", m.rejected},
            {"labels", labels}};
}

AnomalyScores scores_from_json(const json& j)
{
    return {j.at("spatial").get<double>(), j.at("appearance").get<double>(), j.at("motion").get<double>()};
}

LabeledVideo labeled_from_json(const json& j)
{
    try {
        LabeledVideo v;
        v.video_id = j.at("video_id").get<std::string>();
        v.is_real = j.at("is_real").get<bool>();
        v.scores = scores_from_json(j.at("scores"));
        const auto& r = j.at("ranks");
        v.ranks = {r.at("spatial").get<int>(), r.at("appearance").get<int>(), r.at("motion").get<int>()};
        v.label = label_from_code(j.at("label").get<int>());
        v.within_class_rank = j.at("within_class_rank").get<int>();
        v.class_size = j.at("class_size").get<int>();
        v.r_hat = j.at("r_hat").get<double>();
        v.alpha = j.at("alpha").get<double>();
        if (j.contains("review")) {
            const auto& rv = j["review"];
            v.review.status = status_from_name(rv.value("state", "auto"));
            if (v.review.status == ReviewStatus::reassigned) v.review.reassigned_to = label_from_code(rv.at("label").get<int>());
            v.review.reviewer = rv.value("reviewer", "");
            v.review.timestamp = rv.value("timestamp", "");
        }
        if (j.contains("planted_label") && !j["planted_label"].is_null()) v.planted_label = j["planted_label"].get<int>();
        return v;
    } catch (const json::exception& e) {
        throw data_error("labeled video entry " + j.value("video_id", std::string("?")) + ": " + e.what());
    }
}

SplitManifest split_from_json(const json& j)
{
    try {
        SplitManifest m;
        m.cohort_id = j.at("cohort_id").get<std::string>();
        m.seed = j.at("seed").get<std::uint64_t>();
        if (j.contains("created_at") && !j["created_at"].is_null()) m.created_at = j["created_at"].get<std::string>();
        m.train = j.at("train").get<std::vector<std::string>>();
        m.val = j.at("val").get<std::vector<std::string>>();
        m.pending_review = j.value("pending_review", std::vector<std::string>{});
        m.rejected = j.value("rejected", std::vector<std::string>{});
        for (const auto& [id, c] : j.at("labels").items()) m.labels[id] = label_from_code(c.get<int>());
        return m;
    } catch (const json::exception& e) {
        throw data_error(std::string("split manifest: ") + e.what());
    }
}

}  // namespace forgescore
