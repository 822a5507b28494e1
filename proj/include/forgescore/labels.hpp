#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include <json.hpp>

namespace forgescore {

// Integer codes are part of every output format.
enum class ForgeryLabel : int { spatial = 0, appearance = 1, motion = 2, real = 3 };

inline constexpr ForgeryLabel kAnomalyClasses[] = {ForgeryLabel::spatial, ForgeryLabel::appearance,
                                                  ForgeryLabel::motion};

const char* label_name(ForgeryLabel l);
ForgeryLabel label_from_code(int code);  // throws on out-of-range
inline int code(ForgeryLabel l) { return static_cast<int>(l); }

struct AnomalyScores {
    double spatial = 0.0;
    double appearance = 0.0;  // anomaly-oriented: 1 - consistency
    double motion = 0.0;

    double get(ForgeryLabel type) const;
};

struct Ranks {
    int spatial = 0;
    int appearance = 0;
    int motion = 0;

    int get(ForgeryLabel type) const;
    friend bool operator==(const Ranks&, const Ranks&) = default;
};

using RankTable = std::map<std::string, Ranks>;

// Dense 1..n ranks, descending by score, ties broken by ascending id.
std::map<std::string, int> rank_descending(const std::vector<std::pair<std::string, double>>& scores);

// Per anomaly type independently; 1 = most anomalous. Input must be the cohort's fake videos only.
RankTable rank_cohort(const std::map<std::string, AnomalyScores>& scores);

// argmin over (spatial, appearance, motion) of the rank; equal ranks resolve in that order.
ForgeryLabel assign_label(const Ranks& r);
std::map<std::string, ForgeryLabel> assign_labels(const RankTable& ranks);

enum class ConfidenceOrientation { verbatim, inverted };

struct Confidence {
    double r_hat = 0.0;
    double alpha = 1.0;
};

// r_hat = r / n, alpha = ln(e + r_hat). `inverted` uses (n - r + 1) / n instead.
Confidence confidence_weight(int rank, int class_size, ConfidenceOrientation orientation = ConfidenceOrientation::verbatim);
std::vector<Confidence> confidence_weights(const std::vector<int>& ranks, int class_size,
                                           ConfidenceOrientation orientation = ConfidenceOrientation::verbatim);

enum class ReviewStatus { automatic, accepted, reassigned, rejected };

struct ReviewDecision {
    ReviewStatus status = ReviewStatus::automatic;
    ForgeryLabel reassigned_to = ForgeryLabel::real;  // meaningful only when status == reassigned
    std::string reviewer;
    std::string timestamp;
};

struct ScoredVideo {
    std::string video_id;
    bool is_real = false;
    AnomalyScores scores;
    std::optional<int> planted_label;
};

struct LabeledVideo {
    std::string video_id;
    bool is_real = false;
    AnomalyScores scores;
    Ranks ranks;                 // zero for real videos (not ranked)
    ForgeryLabel label = ForgeryLabel::real;
    int within_class_rank = 0;   // 1..class_size for fakes, 0 for real
    int class_size = 0;
    double r_hat = 0.0;
    double alpha = 1.0;          // real videos: 1
    ReviewDecision review;
    std::optional<int> planted_label;

    ForgeryLabel effective_label() const
    {
        return review.status == ReviewStatus::reassigned ? review.reassigned_to : label;
    }
};

// Full labeling pass: cohort ranking over fakes, argmin labels, fresh within-class ranks, confidence weights.
// Output sorted by video_id.
std::vector<LabeledVideo> label_cohort(const std::vector<ScoredVideo>& videos,
                                       ConfidenceOrientation orientation = ConfidenceOrientation::verbatim);

struct SplitManifest {
    std::string cohort_id;
    std::vector<std::string> train;
    std::vector<std::string> val;
    std::vector<std::string> pending_review;
    std::vector<std::string> rejected;
    std::map<std::string, ForgeryLabel> labels;  // final label per non-rejected video
    std::uint64_t seed = 0;
    std::optional<std::string> created_at;       // timestamp of the last applied review event
};

// Review candidates: per anomaly class, the top ceil(n/5) by within-class rank.
std::size_t review_quota(std::size_t class_size);
std::vector<std::string> review_candidates(const std::vector<LabeledVideo>& cohort);

// Candidates go to pending_review until reviewed (accepted/reassigned -> val, rejected -> dropped); the rest
// of each anomaly class -> train. Real videos: seeded uniform sample of ceil(n/5) -> val, rest -> train.
SplitManifest split_cohort(const std::vector<LabeledVideo>& cohort, std::uint64_t seed, const std::string& cohort_id);

nlohmann::json to_json(const AnomalyScores& s);
nlohmann::json to_json(const Ranks& r);
nlohmann::json to_json(const LabeledVideo& v);
nlohmann::json to_json(const SplitManifest& m);
AnomalyScores scores_from_json(const nlohmann::json& j);
LabeledVideo labeled_from_json(const nlohmann::json& j);
SplitManifest split_from_json(const nlohmann::json& j);

}  // namespace forgescore
