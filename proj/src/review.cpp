#include "forgescore/review.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <ctime>
#include <fstream>

#include <fcntl.h>
#include <unistd.h>

#include "forgescore/error.hpp"
#include "forgescore/perturb.hpp"
#include "forgescore/tensor_io.hpp"

namespace forgescore {

using nlohmann::json;

namespace {

const char* verdict_name(VerdictKind k)
{
    switch (k) {
    case VerdictKind::accept: return "accept";
    case VerdictKind::reassign: return "reassign";
    case VerdictKind::reject: return "reject";
    }
    return "?";
}

ReviewStatus status_of(const Verdict& v)
{
    switch (v.kind) {
    case VerdictKind::accept: return ReviewStatus::accepted;
    case VerdictKind::reassign: return ReviewStatus::reassigned;
    case VerdictKind::reject: return ReviewStatus::rejected;
    }
    return ReviewStatus::automatic;
}

}  // namespace

json to_json(const ReviewEvent& e)
{
    json j = {{"seq", e.seq},
              {"timestamp", e.timestamp},
              {"video_id", e.video_id},
              {"verdict", verdict_name(e.verdict.kind)},
              {"reviewer", e.reviewer}};
    if (e.verdict.kind == VerdictKind::reassign) j["label"] = code(e.verdict.label);
    return j;
}

Verdict parse_verdict(const json& body)
{
    if (!body.contains("verdict")) throw std::invalid_argument("missing 'verdict'");
    const auto& v = body["verdict"];
    Verdict out;
    auto target = [](const json& j) {
        if (!j.is_number_integer()) throw std::invalid_argument("reassign target must be an integer label code");
        int c = j.get<int>();
        if (c < 0 || c > 3) throw std::invalid_argument("reassign target out of range: " + std::to_string(c));
        return static_cast<ForgeryLabel>(c);
    };
    if (v.is_string()) {
        auto name = v.get<std::string>();
        if (name == "accept") {
            out.kind = VerdictKind::accept;
        } else if (name == "reject") {
            out.kind = VerdictKind::reject;
        } else if (name == "reassign") {
            out.kind = VerdictKind::reassign;
            if (!body.contains("label")) throw std::invalid_argument("reassign needs 'label'");
            out.label = target(body["label"]);
        } else {
            throw std::invalid_argument("unknown verdict '" + name + "'");
        }
    } else if (v.is_object() && v.size() == 1 && v.contains("reassign")) {
        out.kind = VerdictKind::reassign;
        out.label = target(v["reassign"]);
    } else {
        throw std::invalid_argument("verdict must be a string or {\"reassign\": code}");
    }
    return out;
}

ReviewEvent review_event_from_json(const json& j)
{
    ReviewEvent e;
    e.seq = j.at("seq").get<std::uint64_t>();
    e.timestamp = j.at("timestamp").get<std::string>();
    e.video_id = j.at("video_id").get<std::string>();
    e.reviewer = j.value("reviewer", "");
    e.verdict = parse_verdict(j);
    return e;
}

void ReviewState::apply(const ReviewEvent& e)
{
    effective[e.video_id] = e;
    last_seq = e.seq;
}

ReviewState fold(const std::vector<ReviewEvent>& events)
{
    ReviewState s;
    for (const auto& e : events) s.apply(e);
    return s;
}

std::vector<LabeledVideo> apply_reviews(std::vector<LabeledVideo> cohort, const ReviewState& state)
{
    for (auto& v : cohort) {
        auto it = state.effective.find(v.video_id);
        if (it == state.effective.end()) {
            v.review = {};
            continue;
        }
        v.review.status = status_of(it->second.verdict);
        v.review.reassigned_to = it->second.verdict.label;
        v.review.reviewer = it->second.reviewer;
        v.review.timestamp = it->second.timestamp;
    }
    return cohort;
}

std::vector<ReviewEvent> ReviewJournal::replay(const std::filesystem::path& path)
{
    std::vector<ReviewEvent> events;
    std::ifstream in(path);
    if (!in) return events;
    std::string line;
    std::size_t lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        if (line.empty()) continue;
        ReviewEvent e;
        try {
            e = review_event_from_json(json::parse(line));
        } catch (const std::exception& ex) {
            throw data_error("journal " + path.string() + ":" + std::to_string(lineno) + ": " + ex.what());
        }
        if (!events.empty() && e.seq <= events.back().seq) {
            throw data_error("journal " + path.string() + ":" + std::to_string(lineno) + ": sequence number " +
                             std::to_string(e.seq) + " does not increase");
        }
        events.push_back(std::move(e));
    }
    return events;
}

ReviewJournal::ReviewJournal(std::filesystem::path path) : path_(std::move(path)), events_(replay(path_)) {}

void ReviewJournal::append(const ReviewEvent& e)
{
    if (!events_.empty() && e.seq <= events_.back().seq) throw data_error("journal append: sequence must increase");
    std::string line = to_json(e).dump() + "\n";
    int fd = ::open(path_.c_str(), O_WRONLY | O_CREAT | O_APPEND, 0644);
    if (fd < 0) throw data_error("cannot open journal " + path_.string());
    const char* p = line.data();
    std::size_t left = line.size();
    while (left > 0) {
        auto n = ::write(fd, p, left);
        if (n < 0) {
            ::close(fd);
            throw data_error("journal write failed: " + path_.string());
        }
        p += n;
        left -= static_cast<std::size_t>(n);
    }
    if (::fsync(fd) != 0) {
        ::close(fd);
        throw data_error("journal fsync failed: " + path_.string());
    }
    ::close(fd);
    events_.push_back(e);
}

std::string utc_timestamp()
{
    auto now = std::chrono::system_clock::now();
    auto secs = std::chrono::system_clock::to_time_t(now);
    auto ms = std::chrono::duration_cast<std::chrono::milliseconds>(now.time_since_epoch()).count() % 1000;
    std::tm tm{};
    gmtime_r(&secs, &tm);
    char buf[64];
    std::snprintf(buf, sizeof buf, "%04d-%02d-%02dT%02d:%02d:%02d.%03dZ", tm.tm_year + 1900, tm.tm_mon + 1, tm.tm_mday,
                  tm.tm_hour, tm.tm_min, tm.tm_sec, static_cast<int>(ms));
    return buf;
}

std::vector<int> thumbnail_pixels(const FrameSequence& frames, std::size_t frame, std::size_t size)
{
    if (frame >= frames.frames()) throw data_error("frame index out of range");
    auto view = frames.frame(frame);
    Image gray(view.height, view.width, 1);
    for (std::size_t y = 0; y < view.height; ++y) {
        for (std::size_t x = 0; x < view.width; ++x) {
            double s = 0.0;
            for (std::size_t c = 0; c < view.channels; ++c) s += view.at(y, x, c);
            gray.at(y, x) = s / static_cast<double>(view.channels);
        }
    }
    auto small = resample(gray.view(), size, size);
    std::vector<int> out(small.data.size());
    for (std::size_t i = 0; i < out.size(); ++i) {
        out[i] = std::clamp(static_cast<int>(std::floor(small.data[i] * 255.0 + 0.5)), 0, 255);
    }
    return out;
}

ReviewSession::ReviewSession(Options opts)
    : opts_(std::move(opts)), journal_(opts_.journal), snapshot_(std::make_shared<Snapshot>())
{
    if (!opts_.clock) opts_.clock = utc_timestamp;
    auto s = std::make_shared<Snapshot>();
    s->state = fold(journal_.events());
    snapshot_ = std::move(s);
}

std::shared_ptr<const ReviewSession::Snapshot> ReviewSession::snapshot() const
{
    std::lock_guard lock(snapshot_mutex_);
    return snapshot_;
}

void ReviewSession::publish(std::shared_ptr<const Snapshot> next)
{
    std::lock_guard lock(snapshot_mutex_);
    snapshot_ = std::move(next);
}

std::shared_ptr<const ReviewSession::Snapshot> ReviewSession::require_prepared() const
{
    auto s = snapshot();
    if (!s->data) throw ApiError(409, "no prepared split");
    return s;
}

bool ReviewSession::prepared() const { return snapshot()->data != nullptr; }

ReviewState ReviewSession::state() const { return snapshot()->state; }

void ReviewSession::prepare(std::vector<LabeledVideo> labeled, std::vector<VideoManifest> cohort, std::string cohort_id,
                            std::uint64_t seed)
{
    std::lock_guard writer(writer_mutex_);
    auto data = std::make_shared<Prepared>();
    std::sort(labeled.begin(), labeled.end(), [](const auto& a, const auto& b) { return a.video_id < b.video_id; });
    for (auto& v : labeled) v.review = {};
    data->labeled = std::move(labeled);
    for (std::size_t i = 0; i < data->labeled.size(); ++i) data->index[data->labeled[i].video_id] = i;
    auto cands = review_candidates(data->labeled);
    data->candidates.insert(cands.begin(), cands.end());
    for (auto& m : cohort) data->manifests.emplace(m.video_id, std::move(m));
    data->cohort_id = std::move(cohort_id);
    data->seed = seed;

    auto next = std::make_shared<Snapshot>();
    next->data = std::move(data);
    next->state = snapshot()->state;
    publish(std::move(next));
}

std::map<ForgeryLabel, ClassProgress> ReviewSession::counts(const Snapshot& s)
{
    std::map<ForgeryLabel, ClassProgress> out;
    for (auto c : kAnomalyClasses) out[c] = {};
    for (const auto& id : s.data->candidates) {
        const auto& v = s.data->labeled[s.data->index.at(id)];
        auto& p = out[v.label];
        ++p.candidates;
        auto it = s.state.effective.find(id);
        if (it == s.state.effective.end()) {
            ++p.pending;
            continue;
        }
        switch (it->second.verdict.kind) {
        case VerdictKind::accept: ++p.accepted; break;
        case VerdictKind::reassign: ++p.reassigned; break;
        case VerdictKind::reject: ++p.rejected; break;
        }
    }
    return out;
}

json ReviewSession::progress_json(const Snapshot& s)
{
    json classes = json::object();
    std::size_t pending = 0, reviewed = 0;
    for (const auto& [label, p] : counts(s)) {
        std::size_t done = p.accepted + p.reassigned + p.rejected;
        classes[std::to_string(code(label))] = {{"name", label_name(label)},     {"candidates", p.candidates},
                                                {"pending", p.pending},          {"reviewed", done},
                                                {"accepted", p.accepted},        {"reassigned", p.reassigned},
                                                {"rejected", p.rejected}};
        pending += p.pending;
        reviewed += done;
    }
    return {{"classes", classes}, {"pending", pending}, {"reviewed", reviewed}, {"last_seq", s.state.last_seq}};
}

json ReviewSession::progress() const { return progress_json(*require_prepared()); }

json ReviewSession::queue(int cls, std::size_t limit) const
{
    if (cls < 0 || cls > 2) throw ApiError(400, "class must be 0, 1 or 2");
    auto s = require_prepared();
    std::vector<const LabeledVideo*> items;
    for (const auto& id : s->data->candidates) {
        const auto& v = s->data->labeled[s->data->index.at(id)];
        if (code(v.label) != cls || s->state.effective.count(id)) continue;
        items.push_back(&v);
    }
    std::sort(items.begin(), items.end(), [](const auto* a, const auto* b) {
        if (a->within_class_rank != b->within_class_rank) return a->within_class_rank < b->within_class_rank;
        return a->video_id < b->video_id;
    });
    if (items.size() > limit) items.resize(limit);

    json out = json::array();
    for (const auto* v : items) {
        json thumb = json::object();
        auto m = s->data->manifests.find(v->video_id);
        if (m != s->data->manifests.end() && m->second.has(Artifact::frames)) {
            try {
                auto frames = read_tensor(m->second.path(Artifact::frames)).dim(0);
                thumb = {{"frames", frames},
                         {"indices", {0, frames / 2, frames - 1}},
                         {"size", 64},
                         {"url", "/api/thumb/" + v->video_id + "/{frame}"}};
            } catch (const Error&) {
                thumb = nullptr;
            }
        }
        out.push_back({{"video_id", v->video_id},
                       {"label", code(v->label)},
                       {"label_name", label_name(v->label)},
                       {"scores", to_json(v->scores)},
                       {"ranks", to_json(v->ranks)},
                       {"within_class_rank", v->within_class_rank},
                       {"class_size", v->class_size},
                       {"r_hat", v->r_hat},
                       {"alpha", v->alpha},
                       {"thumbnail", thumb}});
    }
    return out;
}

json ReviewSession::review(const json& body)
{
    if (!body.is_object()) throw ApiError(400, "body must be a JSON object");
    if (!body.contains("video_id") || !body["video_id"].is_string()) throw ApiError(422, "'video_id' must be a string");
    if (body.contains("reviewer") && !body["reviewer"].is_string()) throw ApiError(422, "'reviewer' must be a string");
    Verdict verdict;
    try {
        verdict = parse_verdict(body);
    } catch (const std::invalid_argument& e) {
        throw ApiError(422, std::string("invalid verdict: ") + e.what());
    }
    const auto id = body["video_id"].get<std::string>();
    const auto reviewer = body.value("reviewer", std::string());

    std::lock_guard writer(writer_mutex_);
    auto s = require_prepared();
    if (!s->data->index.count(id)) throw ApiError(404, "unknown video '" + id + "'");
    if (!s->data->candidates.count(id)) throw ApiError(409, "video '" + id + "' is not pending review");

    auto current = s->state.effective.find(id);
    if (current != s->state.effective.end() && current->second.verdict == verdict && current->second.reviewer == reviewer) {
        return {{"deduplicated", true}, {"event", to_json(current->second)}, {"progress", progress_json(*s)}};
    }

    ReviewEvent e{journal_.next_seq(), opts_.clock(), id, verdict, reviewer};
    journal_.append(e);
    auto next = std::make_shared<Snapshot>(*s);
    next->state.apply(e);
    publish(next);
    return {{"deduplicated", false}, {"event", to_json(e)}, {"progress", progress_json(*next)}};
}

SplitManifest ReviewSession::finalize(bool force)
{
    std::lock_guard writer(writer_mutex_);
    auto s = require_prepared();
    std::size_t pending = 0;
    for (const auto& [label, p] : counts(*s)) pending += p.pending;
    if (pending > 0 && !force) throw ApiError(409, std::to_string(pending) + " item(s) still pending review");
    auto manifest = split_cohort(apply_reviews(s->data->labeled, s->state), s->data->seed, s->data->cohort_id);
    if (opts_.finalize_out) {
        std::ofstream out(*opts_.finalize_out, std::ios::trunc);
        if (!out) throw data_error("cannot write split manifest " + opts_.finalize_out->string());
        out << to_json(manifest).dump(2) << "\n";
    }
    return manifest;
}

json ReviewSession::thumbnail(const std::string& video_id, std::size_t frame) const
{
    auto s = require_prepared();
    auto it = s->data->manifests.find(video_id);
    if (it == s->data->manifests.end()) throw ApiError(404, "unknown video '" + video_id + "'");
    if (!it->second.has(Artifact::frames)) throw ApiError(404, "video '" + video_id + "' has no frames artifact");
    auto frames = load_frames(it->second);
    if (frame >= frames.frames()) throw ApiError(404, "frame " + std::to_string(frame) + " out of range");
    return {{"video_id", video_id}, {"frame", frame}, {"width", 64}, {"height", 64}, {"pixels", thumbnail_pixels(frames, frame)}};
}

}  // namespace forgescore
