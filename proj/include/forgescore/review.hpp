#pragma once

#include <cstdint>
#include <filesystem>
#include <functional>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include <json.hpp>

#include "forgescore/labels.hpp"
#include "forgescore/manifest.hpp"

namespace forgescore {

enum class VerdictKind { accept, reassign, reject };

struct Verdict {
    VerdictKind kind = VerdictKind::accept;
    ForgeryLabel label = ForgeryLabel::real;  // target of a reassign

    friend bool operator==(const Verdict& a, const Verdict& b)
    {
        return a.kind == b.kind && (a.kind != VerdictKind::reassign || a.label == b.label);
    }
};

struct ReviewEvent {
    std::uint64_t seq = 0;
    std::string timestamp;
    std::string video_id;
    Verdict verdict;
    std::string reviewer;

    friend bool operator==(const ReviewEvent&, const ReviewEvent&) = default;
};

nlohmann::json to_json(const ReviewEvent& e);
ReviewEvent review_event_from_json(const nlohmann::json& j);

// Parses {"verdict": "accept" | "reject" | "reassign", "label": 0..3} or {"verdict": {"reassign": 2}}.
// Throws std::invalid_argument on malformed input.
Verdict parse_verdict(const nlohmann::json& body);

// Effective verdict per video: a left fold of the journal, later events superseding earlier ones.
struct ReviewState {
    std::map<std::string, ReviewEvent> effective;
    std::uint64_t last_seq = 0;

    void apply(const ReviewEvent& e);
    friend bool operator==(const ReviewState&, const ReviewState&) = default;
};

ReviewState fold(const std::vector<ReviewEvent>& events);

// Copies effective verdicts onto the labeled cohort's review fields.
std::vector<LabeledVideo> apply_reviews(std::vector<LabeledVideo> cohort, const ReviewState& state);

// JSON-lines, one event per line, fsync after every append. Opening replays the existing file and rejects
// non-increasing sequence numbers.
class ReviewJournal {
public:
    explicit ReviewJournal(std::filesystem::path path);

    const std::vector<ReviewEvent>& events() const noexcept { return events_; }
    std::uint64_t next_seq() const noexcept { return events_.empty() ? 1 : events_.back().seq + 1; }
    void append(const ReviewEvent& e);
    const std::filesystem::path& path() const noexcept { return path_; }

    static std::vector<ReviewEvent> replay(const std::filesystem::path& path);

private:
    std::filesystem::path path_;
    std::vector<ReviewEvent> events_;
};

// Error surfaced through the HTTP layer with its status code.
struct ApiError : std::runtime_error {
    int status;
    ApiError(int s, const std::string& what) : std::runtime_error(what), status(s) {}
};

struct ClassProgress {
    std::size_t candidates = 0, pending = 0, accepted = 0, reassigned = 0, rejected = 0;
};

// Review workflow over one prepared cohort. Readers take an immutable snapshot; writers are serialized.
class ReviewSession {
public:
    using Clock = std::function<std::string()>;

    struct Options {
        std::filesystem::path journal;
        std::optional<std::filesystem::path> finalize_out;
        Clock clock;  // defaults to UTC ISO-8601
    };

    explicit ReviewSession(Options opts);

    void prepare(std::vector<LabeledVideo> labeled, std::vector<VideoManifest> cohort, std::string cohort_id,
                 std::uint64_t seed);
    bool prepared() const;

    nlohmann::json queue(int cls, std::size_t limit) const;
    nlohmann::json review(const nlohmann::json& body);
    nlohmann::json progress() const;
    SplitManifest finalize(bool force);
    nlohmann::json thumbnail(const std::string& video_id, std::size_t frame) const;

    ReviewState state() const;

private:
    struct Prepared {
        std::vector<LabeledVideo> labeled;
        std::map<std::string, std::size_t> index;  // video_id -> position in labeled
        std::set<std::string> candidates;
        std::map<std::string, VideoManifest> manifests;
        std::string cohort_id;
        std::uint64_t seed = 0;
    };
    struct Snapshot {
        std::shared_ptr<const Prepared> data;  // null until prepare()
        ReviewState state;
    };

    std::shared_ptr<const Snapshot> snapshot() const;
    std::shared_ptr<const Snapshot> require_prepared() const;
    void publish(std::shared_ptr<const Snapshot> next);
    static std::map<ForgeryLabel, ClassProgress> counts(const Snapshot& s);
    static nlohmann::json progress_json(const Snapshot& s);

    Options opts_;
    ReviewJournal journal_;
    mutable std::mutex snapshot_mutex_;  // guards the pointer swap only
    std::mutex writer_mutex_;
    std::shared_ptr<const Snapshot> snapshot_;
};

std::string utc_timestamp();

// 64x64 grayscale thumbnail (channel mean, bilinear resample), values round-half-up to 0..255.
std::vector<int> thumbnail_pixels(const FrameSequence& frames, std::size_t frame, std::size_t size = 64);

}  // namespace forgescore
