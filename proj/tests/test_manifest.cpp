#include <fstream>

#include <gtest/gtest.h>
#include <json.hpp>

#include "forgescore/manifest.hpp"
#include "forgescore/tensor_io.hpp"
#include "test_util.hpp"

using namespace forgescore;
using forgescore::testing::TempDir;
using nlohmann::json;

namespace {

void write_manifest(const std::filesystem::path& dir, const json& j)
{
    std::filesystem::create_directories(dir);
    std::ofstream(dir / "manifest.json") << j.dump();
}

json fake_video(const std::string& id)
{
    return {{"video_id", id}, {"cohort_id", "c"}, {"is_real", false}, {"artifacts", {{"frames", "frames.fvt"}}}, {"planted_label", 2}};
}

std::string error_of(const std::function<void()>& fn)
{
    try {
        fn();
    } catch (const Error& e) {
        return e.what();
    }
    return "";
}

}  // namespace

TEST(Manifest, CohortSortedById)
{
    TempDir dir;
    for (std::string id : {"v2", "v1"}) {
        write_manifest(dir / id, fake_video(id));
        write_tensor(Tensor::zeros({2, 2, 2, 1}), dir.path() / id / "frames.fvt");
    }
    auto cohort = load_cohort(dir.path());
    ASSERT_EQ(cohort.size(), 2u);
    EXPECT_EQ(cohort[0].video_id, "v1");
    EXPECT_EQ(cohort[1].video_id, "v2");
    EXPECT_EQ(cohort[0].planted_label, 2);
    EXPECT_EQ(cohort[0].path(Artifact::frames), dir.path() / "v1" / "frames.fvt");
    EXPECT_EQ(load_frames(cohort[0]).frames(), 2u);
}

TEST(Manifest, MissingFramesForFakeNamesField)
{
    TempDir dir;
    auto j = fake_video("v1");
    j["artifacts"] = json::object();
    write_manifest(dir.path(), j);
    auto msg = error_of([&] { load_manifest(dir / "manifest.json"); });
    EXPECT_NE(msg.find("artifacts.frames"), std::string::npos) << msg;
}

TEST(Manifest, RealVideoWithoutFramesIsAccepted)
{
    TempDir dir;
    auto j = fake_video("r1");
    j["is_real"] = true;
    j["artifacts"] = json::object();
    j.erase("planted_label");
    write_manifest(dir.path(), j);
    EXPECT_TRUE(load_manifest(dir / "manifest.json").is_real);
}

TEST(Manifest, DuplicateIdRejected)
{
    TempDir dir;
    for (std::string sub : {"a", "b"}) {
        write_manifest(dir / sub, fake_video("v1"));
        write_tensor(Tensor::zeros({2, 2, 2, 1}), dir.path() / sub / "frames.fvt");
    }
    auto msg = error_of([&] { load_cohort(dir.path()); });
    EXPECT_NE(msg.find("duplicate"), std::string::npos) << msg;
    EXPECT_NE(msg.find("v1"), std::string::npos) << msg;
}

TEST(Manifest, SchemaErrorsNameTheField)
{
    TempDir dir;
    auto j = fake_video("v1");
    j["is_real"] = "no";
    write_manifest(dir.path(), j);
    EXPECT_NE(error_of([&] { load_manifest(dir / "manifest.json"); }).find("is_real"), std::string::npos);

    j = fake_video("v1");
    j["artifacts"]["sound"] = "x.fvt";
    write_manifest(dir.path(), j);
    EXPECT_NE(error_of([&] { load_manifest(dir / "manifest.json"); }).find("sound"), std::string::npos);

    j = fake_video("v1");
    j.erase("video_id");
    write_manifest(dir.path(), j);
    EXPECT_NE(error_of([&] { load_manifest(dir / "manifest.json"); }).find("video_id"), std::string::npos);
}

TEST(Manifest, DanglingPathNamesVideo)
{
    TempDir dir;
    write_manifest(dir.path(), fake_video("v9"));
    auto msg = error_of([&] { load_manifest(dir / "manifest.json"); });
    EXPECT_NE(msg.find("v9"), std::string::npos) << msg;
}

TEST(Manifest, SaveLoadRoundTrip)
{
    TempDir dir;
    write_tensor(Tensor::zeros({2, 2, 2, 1}), dir / "frames.fvt");
    VideoManifest m;
    m.video_id = "x";
    m.cohort_id = "c";
    m.artifacts[Artifact::frames] = dir / "frames.fvt";
    m.planted_label = 1;
    save_manifest(m, dir / "manifest.json");
    auto back = load_manifest(dir / "manifest.json");
    EXPECT_EQ(back.video_id, "x");
    EXPECT_EQ(back.planted_label, 1);
    EXPECT_EQ(back.path(Artifact::frames), dir / "frames.fvt");
}
