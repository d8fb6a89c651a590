#include <doctest.h>

#include <filesystem>
#include <memory>
#include <string>

#include <json.hpp>

#include "selfcorrect/jsonl.hpp"
#include "selfcorrect/config.hpp"
#include "selfcorrect/rundir.hpp"
#include "support/test_util.hpp"

using namespace selfcorrect;
using test_support::TempDir;
using test_support::write_text;

namespace fs = std::filesystem;

TEST_CASE("a run directory tracks artifacts behind a config-hash manifest") {
  TempDir tmp;
  const std::string root = tmp.str("run");

  RunDir dir(root, "00000000deadbeef");
  CHECK(fs::is_directory(root));
  CHECK(fs::exists(root + "/manifest.json"));
  CHECK(dir.root() == root);
  CHECK(dir.path_of("solutions.jsonl") == root + "/solutions.jsonl");

  SUBCASE("require() names the missing artifact and the remedy") {
    CHECK_FALSE(dir.has("solutions.jsonl"));
    CHECK_THROWS_WITH_AS(dir.require("solutions.jsonl"),
                         doctest::Contains("solutions.jsonl"), MissingArtifact);
    CHECK_THROWS_WITH_AS(dir.require("solutions.jsonl"), doctest::Contains("run the stage"),
                         MissingArtifact);
    write_text(dir.path_of("solutions.jsonl"), "{}\n");
    CHECK(dir.require("solutions.jsonl") == root + "/solutions.jsonl");
  }

  SUBCASE("stage_current means recorded fingerprint still matches the bytes") {
    write_text(dir.path_of("solutions.jsonl"), "{\"id\":\"s1\"}\n");
    CHECK_FALSE(dir.stage_current("solutions.jsonl"));  // present but never recorded

    dir.record_stage("solutions.jsonl");
    CHECK(dir.stage_current("solutions.jsonl"));

    write_text(dir.path_of("solutions.jsonl"), "{\"id\":\"s1\",\"edited\":true}\n");
    CHECK_FALSE(dir.stage_current("solutions.jsonl"));  // stale after edit

    dir.record_stage("solutions.jsonl");
    CHECK(dir.stage_current("solutions.jsonl"));

    fs::remove(dir.path_of("solutions.jsonl"));
    CHECK_FALSE(dir.stage_current("solutions.jsonl"));  // gone entirely
  }

  SUBCASE("recording a missing artifact is the caller's bug") {
    CHECK_THROWS_AS(dir.record_stage("never_written.jsonl"), MissingArtifact);
  }

  SUBCASE("fingerprints persist across reopen under the same config hash") {
    write_text(dir.path_of("pairs.jsonl"), "{\"p\":1}\n");
    dir.record_stage("pairs.jsonl");

    RunDir reopened(root, "00000000deadbeef");
    CHECK(reopened.stage_current("pairs.jsonl"));
    CHECK(reopened.stage_fingerprints() == dir.stage_fingerprints());
  }

  SUBCASE("a different config hash refuses to reuse the directory") {
    CHECK_THROWS_WITH_AS(RunDir(root, "ffffffff00000000"),
                         doctest::Contains("different configuration"), ConfigInvalid);
  }

  SUBCASE("a corrupt manifest is reported, not silently rebuilt") {
    write_text(root + "/manifest.json", "not json");
    CHECK_THROWS_AS(RunDir(root, "00000000deadbeef"), std::runtime_error);
  }
}

TEST_CASE("manifests are timestamp-free and reproduce byte-identically") {
  TempDir tmp;
  const auto build = [&](const std::string& leaf) {
    RunDir dir(tmp.str(leaf), "1234567812345678");
    write_text(dir.path_of("a.jsonl"), "{\"v\":1}\n");
    dir.record_stage("a.jsonl");
    write_text(dir.path_of("b.jsonl"), "{\"v\":2}\n");
    dir.record_stage("b.jsonl");
    return read_file(tmp.str(leaf) + "/manifest.json");
  };
  const std::string first = build("one");
  const std::string second = build("two");
  CHECK(first == second);

  const nlohmann::json j = nlohmann::json::parse(first);
  REQUIRE(j.is_object());
  CHECK(j.size() == 2);  // config_hash + stages, nothing else
  CHECK(j.at("config_hash") == "1234567812345678");
  CHECK(j.at("stages").size() == 2);
  CHECK(j.at("stages").contains("a.jsonl"));
}

TEST_CASE("the directory lock is exclusive and released on destruction") {
  TempDir tmp;
  const std::string root = tmp.str("run");
  fs::create_directories(root);

  auto held = std::make_unique<DirLock>(root);
  CHECK_THROWS_WITH_AS(DirLock{root}, doctest::Contains("locked"), RunDirLocked);

  held.reset();  // release
  CHECK_NOTHROW(DirLock{root});

  SUBCASE("locks on different directories are independent") {
    const std::string other = tmp.str("run2");
    fs::create_directories(other);
    DirLock a(root);
    CHECK_NOTHROW(DirLock{other});
  }
}
