#include <atomic>
#include <fstream>
#include <thread>

#include <httplib.h>
#include <gtest/gtest.h>

#include "forgescore/review.hpp"
#include "forgescore/review_server.hpp"
#include "forgescore/tensor_io.hpp"
#include "test_util.hpp"

using namespace forgescore;
using forgescore::testing::TempDir;
using nlohmann::json;

namespace {

// Cohort of `per_class` fakes per anomaly class plus `reals`, labeled from scores that make class membership
// and within-class order predictable: video "<c>_<i>" is most anomalous in type c, with score decreasing in i.
std::vector<LabeledVideo> make_labeled(std::size_t per_class, std::size_t reals)
{
    std::vector<ScoredVideo> scored;
    for (int c = 0; c < 3; ++c) {
        for (std::size_t i = 0; i < per_class; ++i) {
            ScoredVideo v;
            v.video_id = std::to_string(c) + "_" + std::to_string(i);
            double hi = 10.0 - static_cast<double>(i) * 0.01, lo = 0.0;
            v.scores = {c == 0 ? hi : lo, c == 1 ? hi : lo, c == 2 ? hi : lo};
            scored.push_back(v);
        }
    }
    for (std::size_t i = 0; i < reals; ++i) {
        ScoredVideo v;
        v.video_id = "r_" + std::to_string(i);
        v.is_real = true;
        scored.push_back(v);
    }
    return label_cohort(scored);
}

std::vector<VideoManifest> frame_manifests(const TempDir& dir, const std::vector<LabeledVideo>& labeled, double value)
{
    write_tensor(Tensor::filled({3, 16, 24, 3}, value), dir / "frames.fvt");
    std::vector<VideoManifest> out;
    for (const auto& v : labeled) {
        VideoManifest m;
        m.video_id = v.video_id;
        m.is_real = v.is_real;
        if (v.video_id != "0_1") m.artifacts[Artifact::frames] = dir / "frames.fvt";
        out.push_back(m);
    }
    return out;
}

ReviewSession::Options options(const TempDir& dir, const std::string& journal = "journal.jsonl")
{
    auto counter = std::make_shared<int>(0);
    return {dir / journal, dir / "split.json", [counter] { return "t" + std::to_string(1000 + ++*counter); }};
}

int status_of(const std::function<void()>& fn)
{
    try {
        fn();
    } catch (const ApiError& e) {
        return e.status;
    }
    return 200;
}

json body(const std::string& id, const std::string& verdict, const std::string& reviewer = "alice", int label = -1)
{
    json b = {{"video_id", id}, {"verdict", verdict}, {"reviewer", reviewer}};
    if (label >= 0) b["label"] = label;
    return b;
}

bool contains(const std::vector<std::string>& v, const std::string& id) { return std::find(v.begin(), v.end(), id) != v.end(); }

}  // namespace

TEST(Review, QueueOrderingLimitAndExclusion)
{
    TempDir dir;
    ReviewSession s(options(dir));
    EXPECT_EQ(status_of([&] { s.queue(1, 10); }), 409);
    auto labeled = make_labeled(10, 4);
    s.prepare(labeled, frame_manifests(dir, labeled, 0.5), "c", 1);

    auto q = s.queue(1, 100);
    ASSERT_EQ(q.size(), 2u);
    EXPECT_EQ(q[0]["video_id"], "1_0");
    EXPECT_EQ(q[1]["video_id"], "1_1");
    EXPECT_EQ(q[0]["within_class_rank"], 1);
    EXPECT_EQ(q[0]["thumbnail"]["indices"], json::array({0, 1, 2}));
    EXPECT_TRUE(q[0].contains("scores"));
    EXPECT_TRUE(q[0].contains("ranks"));

    auto one = s.queue(1, 1);
    ASSERT_EQ(one.size(), 1u);
    EXPECT_EQ(one[0]["video_id"], "1_0");

    s.review(body("1_0", "accept"));
    s.review(body("1_1", "accept"));
    EXPECT_TRUE(s.queue(1, 100).empty());
    EXPECT_EQ(s.queue(0, 100).size(), 2u);
    EXPECT_EQ(status_of([&] { s.queue(3, 1); }), 400);
    EXPECT_EQ(status_of([&] { s.queue(-1, 1); }), 400);
}

TEST(Review, VerdictSemanticsOnFinalize)
{
    TempDir dir;
    ReviewSession s(options(dir));
    auto labeled = make_labeled(10, 5);
    s.prepare(labeled, {}, "c", 1);
    s.review(body("0_0", "accept"));
    s.review(body("0_1", "reassign", "bob", 2));
    s.review(body("1_0", "reject"));
    s.review(json{{"video_id", "1_1"}, {"verdict", {{"reassign", 0}}}, {"reviewer", "bob"}});
    s.review(body("2_0", "accept"));

    EXPECT_EQ(status_of([&] { s.finalize(false); }), 409);
    s.review(body("2_1", "accept"));
    auto m = s.finalize(false);
    EXPECT_TRUE(contains(m.val, "0_0"));
    EXPECT_EQ(m.labels.at("0_0"), ForgeryLabel::spatial);
    EXPECT_TRUE(contains(m.val, "0_1"));
    EXPECT_EQ(m.labels.at("0_1"), ForgeryLabel::motion);
    EXPECT_TRUE(contains(m.rejected, "1_0"));
    EXPECT_FALSE(contains(m.train, "1_0") || contains(m.val, "1_0"));
    EXPECT_EQ(m.labels.at("1_1"), ForgeryLabel::spatial);
    EXPECT_TRUE(m.pending_review.empty());
    EXPECT_EQ(m.train.size(), 3u * 8u + 4u);
    EXPECT_EQ(m.created_at, "t1006");

    std::ifstream in(dir / "split.json");
    EXPECT_EQ(split_from_json(json::parse(in)).val, m.val);
}

TEST(Review, ErrorStatuses)
{
    TempDir dir;
    ReviewSession s(options(dir));
    s.prepare(make_labeled(10, 2), {}, "c", 1);
    EXPECT_EQ(status_of([&] { s.review(body("nope", "accept")); }), 404);
    EXPECT_EQ(status_of([&] { s.review(body("0_5", "accept")); }), 409);   // not among review candidates
    EXPECT_EQ(status_of([&] { s.review(body("r_0", "accept")); }), 409);   // real videos are never pending
    EXPECT_EQ(status_of([&] { s.review(body("0_0", "maybe")); }), 422);
    EXPECT_EQ(status_of([&] { s.review(body("0_0", "reassign")); }), 422);
    EXPECT_EQ(status_of([&] { s.review(body("0_0", "reassign", "a", 7)); }), 422);
    EXPECT_EQ(status_of([&] { s.review(json::array()); }), 400);
    EXPECT_EQ(status_of([&] { s.review(json{{"verdict", "accept"}}); }), 422);
    EXPECT_TRUE(ReviewJournal::replay(dir / "journal.jsonl").empty());
}

TEST(Review, IdenticalRepeatIsDeduplicated)
{
    TempDir dir;
    ReviewSession s(options(dir));
    s.prepare(make_labeled(10, 2), {}, "c", 1);
    auto first = s.review(body("0_0", "accept"));
    auto again = s.review(body("0_0", "accept"));
    EXPECT_FALSE(first["deduplicated"].get<bool>());
    EXPECT_TRUE(again["deduplicated"].get<bool>());
    EXPECT_EQ(again["event"]["seq"], first["event"]["seq"]);
    EXPECT_EQ(ReviewJournal::replay(dir / "journal.jsonl").size(), 1u);
    s.review(body("0_0", "accept", "carol"));  // different reviewer is a new event
    s.review(body("0_0", "reject"));           // later verdict supersedes
    EXPECT_EQ(ReviewJournal::replay(dir / "journal.jsonl").size(), 3u);
    EXPECT_EQ(s.state().effective.at("0_0").verdict.kind, VerdictKind::reject);
}

TEST(Review, ProgressCounters)
{
    TempDir dir;
    ReviewSession s(options(dir));
    s.prepare(make_labeled(10, 2), {}, "c", 1);
    s.review(body("0_0", "accept"));
    s.review(body("0_1", "reject"));
    s.review(body("2_0", "reassign", "a", 1));
    auto p = s.progress();
    EXPECT_EQ(p["pending"], 3);
    EXPECT_EQ(p["reviewed"], 3);
    EXPECT_EQ(p["classes"]["0"]["accepted"], 1);
    EXPECT_EQ(p["classes"]["0"]["rejected"], 1);
    EXPECT_EQ(p["classes"]["0"]["pending"], 0);
    EXPECT_EQ(p["classes"]["2"]["reassigned"], 1);
    EXPECT_EQ(p["classes"]["1"]["pending"], 2);
    EXPECT_EQ(p["last_seq"], 3);
}

TEST(Review, ThumbnailRounding)
{
    TempDir dir;
    ReviewSession s(options(dir));
    auto labeled = make_labeled(10, 1);
    s.prepare(labeled, frame_manifests(dir, labeled, 0.5), "c", 1);
    auto t = s.thumbnail("0_0", 2);
    EXPECT_EQ(t["width"], 64);
    auto px = t["pixels"].get<std::vector<int>>();
    ASSERT_EQ(px.size(), 64u * 64u);
    for (int v : px) ASSERT_EQ(v, 128);
    EXPECT_EQ(status_of([&] { s.thumbnail("0_1", 0); }), 404);  // no frames artifact
    EXPECT_EQ(status_of([&] { s.thumbnail("0_0", 3); }), 404);
    EXPECT_EQ(status_of([&] { s.thumbnail("zz", 0); }), 404);
}

TEST(Review, CrashReplayEquivalence)
{
    TempDir dir;
    auto labeled = make_labeled(10, 3);
    std::vector<ReviewState> states;
    {
        ReviewSession s(options(dir));
        s.prepare(labeled, {}, "c", 1);
        Rng rng(1);
        auto candidates = review_candidates(labeled);
        for (int i = 0; i < 40; ++i) {
            const auto& id = candidates[rng.below(candidates.size())];
            const char* verdicts[] = {"accept", "reject", "reassign"};
            auto r = s.review(body(id, verdicts[rng.below(3)], "r" + std::to_string(rng.below(2)), static_cast<int>(rng.below(4))));
            if (!r["deduplicated"].get<bool>()) states.push_back(s.state());
        }
    }
    auto events = ReviewJournal::replay(dir / "journal.jsonl");
    ASSERT_EQ(events.size(), states.size());
    for (std::size_t k = 1; k <= events.size(); ++k) {
        auto prefix = fold({events.begin(), events.begin() + static_cast<std::ptrdiff_t>(k)});
        EXPECT_EQ(prefix, states[k - 1]) << "prefix " << k;
    }
    ReviewSession reopened(options(dir));
    EXPECT_EQ(reopened.state(), states.back());
}

TEST(Review, RandomSequencesMatchFoldOracle)
{
    TempDir dir;
    auto labeled = make_labeled(10, 5);
    auto candidates = review_candidates(labeled);
    Rng rng(77);
    for (int trial = 0; trial < 200; ++trial) {
        auto name = "j" + std::to_string(trial) + ".jsonl";
        ReviewSession s(options(dir, name));
        s.prepare(labeled, {}, "c", 9);
        // Oracle: last-write-wins map of (kind, label), skipping identical repeats.
        std::map<std::string, std::tuple<VerdictKind, int, std::string>> oracle;
        std::size_t appended = 0;
        int steps = static_cast<int>(rng.below(25));
        for (int i = 0; i < steps; ++i) {
            const auto& id = candidates[rng.below(candidates.size())];
            int kind = static_cast<int>(rng.below(3));
            int label = static_cast<int>(rng.below(4));
            std::string reviewer = rng.below(2) ? "a" : "b";
            const char* names[] = {"accept", "reassign", "reject"};
            s.review(body(id, names[kind], reviewer, label));
            auto entry = std::make_tuple(static_cast<VerdictKind>(kind), kind == 1 ? label : 0, reviewer);
            auto it = oracle.find(id);
            if (it == oracle.end() || it->second != entry) ++appended;
            oracle[id] = entry;
        }
        auto replayed = fold(ReviewJournal::replay(dir / name));
        ASSERT_EQ(replayed, s.state());
        ASSERT_EQ(replayed.effective.size(), oracle.size());
        ASSERT_EQ(replayed.last_seq, appended);
        for (const auto& [id, entry] : oracle) {
            const auto& e = replayed.effective.at(id);
            ASSERT_EQ(e.verdict.kind, std::get<0>(entry));
            if (e.verdict.kind == VerdictKind::reassign) ASSERT_EQ(code(e.verdict.label), std::get<1>(entry));
            ASSERT_EQ(e.reviewer, std::get<2>(entry));
        }
        auto m = s.finalize(true);
        for (const auto& [id, entry] : oracle) {
            auto kind = std::get<0>(entry);
            if (kind == VerdictKind::reject) {
                ASSERT_TRUE(contains(m.rejected, id));
                ASSERT_EQ(m.labels.count(id), 0u);
            } else {
                ASSERT_TRUE(contains(m.val, id));
                auto original = std::find_if(labeled.begin(), labeled.end(), [&](const auto& v) { return v.video_id == id; })->label;
                ASSERT_EQ(m.labels.at(id), kind == VerdictKind::reassign ? static_cast<ForgeryLabel>(std::get<1>(entry)) : original);
            }
        }
        ASSERT_EQ(m.pending_review.size(), candidates.size() - oracle.size());
    }
}

TEST(Review, JournalRejectsBadInput)
{
    TempDir dir;
    std::ofstream(dir / "j.jsonl") << R"({"seq":2,"timestamp":"t","video_id":"a","verdict":"accept","reviewer":""})" << "\n"
                                   << R"({"seq":2,"timestamp":"t","video_id":"b","verdict":"accept","reviewer":""})" << "\n";
    EXPECT_THROW(ReviewJournal::replay(dir / "j.jsonl"), Error);
    std::ofstream(dir / "k.jsonl") << "{not json\n";
    EXPECT_THROW(ReviewJournal::replay(dir / "k.jsonl"), Error);
    ReviewJournal fresh(dir / "new.jsonl");
    EXPECT_EQ(fresh.next_seq(), 1u);
    fresh.append({5, "t", "x", {}, "r"});
    EXPECT_THROW(fresh.append({5, "t", "x", {}, "r"}), Error);
    EXPECT_EQ(ReviewJournal(dir / "new.jsonl").next_seq(), 6u);
}

TEST(Review, ConcurrentReadersSeeConsistentSnapshots)
{
    TempDir dir;
    ReviewSession s(options(dir));
    auto labeled = make_labeled(20, 2);
    s.prepare(labeled, {}, "c", 1);
    auto candidates = review_candidates(labeled);
    std::atomic<bool> done{false};
    std::atomic<int> bad{0};
    std::vector<std::jthread> readers;
    for (int r = 0; r < 4; ++r) {
        readers.emplace_back([&] {
            while (!done) {
                auto p = s.progress();
                if (p["pending"].get<int>() + p["reviewed"].get<int>() != static_cast<int>(candidates.size())) ++bad;
            }
        });
    }
    for (const auto& id : candidates) s.review(body(id, "accept"));
    done = true;
    readers.clear();
    EXPECT_EQ(bad, 0);
    EXPECT_EQ(s.progress()["pending"], 0);
}

TEST(ReviewHttp, EndpointsRoundTrip)
{
    TempDir dir;
    std::filesystem::create_directories(dir / "ui");
    std::ofstream(dir / "ui" / "index.html") << "<html>review</html>";
    ReviewSession s(options(dir));
    auto labeled = make_labeled(10, 2);
    s.prepare(labeled, frame_manifests(dir, labeled, 0.5), "c", 3);
    ServerOptions opts;
    opts.port = 0;
    opts.ui_dir = dir / "ui";
    ReviewServer server(s, opts);
    int port = server.bind();
    std::thread worker([&] { server.serve(); });

    httplib::Client cli("127.0.0.1", port);
    auto q = cli.Get("/api/queue?class=2&limit=1");
    ASSERT_TRUE(q);
    EXPECT_EQ(q->status, 200);
    EXPECT_EQ(json::parse(q->body)[0]["video_id"], "2_0");
    EXPECT_EQ(cli.Get("/api/queue?class=x")->status, 400);
    EXPECT_EQ(cli.Post("/api/review", "{bad", "application/json")->status, 400);
    EXPECT_EQ(cli.Post("/api/review", body("zz", "accept").dump(), "application/json")->status, 404);
    EXPECT_EQ(cli.Post("/api/review", body("2_0", "nah").dump(), "application/json")->status, 422);
    auto ok = cli.Post("/api/review", body("2_0", "reassign", "a", 1).dump(), "application/json");
    EXPECT_EQ(ok->status, 200);
    EXPECT_EQ(json::parse(ok->body)["event"]["seq"], 1);
    EXPECT_EQ(cli.Post("/api/finalize", "", "application/json")->status, 409);
    auto forced = cli.Post("/api/finalize?force=true", "", "application/json");
    EXPECT_EQ(forced->status, 200);
    auto manifest = split_from_json(json::parse(forced->body));
    EXPECT_EQ(manifest.labels.at("2_0"), ForgeryLabel::appearance);
    EXPECT_EQ(manifest.pending_review.size(), 5u);
    EXPECT_EQ(cli.Post("/api/finalize", R"({"force": true})", "application/json")->status, 200);
    auto progress = json::parse(cli.Get("/api/progress")->body);
    EXPECT_EQ(progress["reviewed"], 1);
    auto thumb = cli.Get("/api/thumb/2_0/0");
    EXPECT_EQ(thumb->status, 200);
    EXPECT_EQ(json::parse(thumb->body)["pixels"][0], 128);
    EXPECT_EQ(cli.Get("/api/thumb/0_1/0")->status, 404);
    auto index = cli.Get("/");
    EXPECT_EQ(index->status, 200);
    EXPECT_NE(index->body.find("review"), std::string::npos);

    server.stop();
    worker.join();
}
