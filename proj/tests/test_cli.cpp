#include <gtest/gtest.h>

#include <filesystem>
#include <fstream>
#include <sstream>

#include "checkin/cli.hpp"
#include "checkin/gbm.hpp"
#include "checkin/ingest.hpp"
#include "checkin/service.hpp"

using namespace checkin;
namespace fs = std::filesystem;

namespace {

const fs::path kData = CHECKIN_TEST_DATA;

struct Run {
  int code;
  std::string out;
  std::string err;
};

Run run(std::vector<std::string> args) {
  args.insert(args.begin(), "checkin");
  std::ostringstream out, err;
  const int code = run_cli(args, out, err);
  return {code, out.str(), err.str()};
}

class CliTest : public ::testing::Test {
 protected:
  void SetUp() override {
    dir_ = fs::temp_directory_path() /
           ("checkin_cli_" + std::string(::testing::UnitTest::GetInstance()->current_test_info()->name()));
    fs::remove_all(dir_);
    fs::create_directories(dir_);
  }
  void TearDown() override { fs::remove_all(dir_); }
  std::string path(const std::string& name) const { return (dir_ / name).string(); }

  fs::path dir_;
};

}  // namespace

TEST_F(CliTest, MissingInputIsUsageError) {
  const auto r = run({"ingest", "--in", path("nope.jsonl"), "--out", path("d.json")});
  EXPECT_EQ(r.code, kExitUsage);
  EXPECT_NE(r.err.find("input not found"), std::string::npos);
}

TEST_F(CliTest, UnknownOptionIsUsageError) {
  EXPECT_EQ(run({"synth", "--out", path("d.json"), "--bogus"}).code, kExitUsage);
  EXPECT_EQ(run({}).code, kExitUsage);
}

TEST_F(CliTest, BadJsonLineIsRejectedNotFatal) {
  {
    std::ifstream src(kData / "wimbly_lu.jsonl");
    std::ofstream dst(path("raw.jsonl"));
    dst << src.rdbuf() << "{broken\n";
  }
  const auto r = run({"ingest", "--in", path("raw.jsonl"), "--out", path("d.json"), "--rejects",
                      path("rej.jsonl"), "--summary", path("summary.csv")});
  ASSERT_EQ(r.code, kExitOk) << r.err;
  EXPECT_NE(r.out.find("kept 1 rejected 1"), std::string::npos) << r.out;
  EXPECT_NE(r.err.find("invocation: checkin ingest"), std::string::npos);
  const auto d = load_dataset(path("d.json"));
  ASSERT_EQ(d.profiles.size(), 1u);
  EXPECT_TRUE(d.profiles[0].is_food);
  std::ifstream rej(path("rej.jsonl"));
  std::string line;
  ASSERT_TRUE(std::getline(rej, line));
  EXPECT_NE(line.find("invalid json"), std::string::npos);
  EXPECT_TRUE(fs::exists(path("summary.csv")));
}

TEST_F(CliTest, IngestWithFoodListAndBox) {
  {
    std::ofstream food(path("food.txt"));
    food << "# food labels\nCoffee Shop\nRestaurant\n";
  }
  const auto r = run({"ingest", "--in", (kData / "mixed.jsonl").string(), "--out", path("d.json"),
                      "--food-list", path("food.txt")});
  ASSERT_EQ(r.code, kExitOk) << r.err;
  EXPECT_NE(r.out.find("kept 3 rejected 2 food 2 out-of-scope 1"), std::string::npos) << r.out;
  EXPECT_EQ(run({"ingest", "--in", (kData / "mixed.jsonl").string(), "--out", path("d.json"),
                 "--food-list", path("missing.txt")})
                .code,
            kExitUsage);
  EXPECT_EQ(run({"ingest", "--in", (kData / "mixed.jsonl").string(), "--out", path("d.json"),
                 "--bbox", "1,2,3"})
                .code,
            kExitUsage);
}

TEST_F(CliTest, SynthTrainEvalPipeline) {
  ASSERT_EQ(run({"synth", "--out", path("city.json"), "--n", "300", "--seed", "5"}).code, kExitOk);
  const auto train = run({"train", "--in", path("city.json"), "--out", path("model.json"),
                          "--iterations", "20", "--max-depth", "4", "--mask", "110011"});
  ASSERT_EQ(train.code, kExitOk) << train.err;
  EXPECT_NE(train.out.find("final training MSE"), std::string::npos);
  EXPECT_NE(train.out.find("importance"), std::string::npos);
  EXPECT_EQ(load_model(path("model.json")).metadata["mask"], "110011");

  const auto eval = run({"eval", "--in", path("city.json"), "--family", "dnn", "--k", "5",
                         "--out", path("report.json")});
  ASSERT_EQ(eval.code, kExitOk) << eval.err;
  std::ifstream report(path("report.json"));
  const auto doc = nlohmann::json::parse(report);
  EXPECT_EQ(doc["model"], "dnn");
  EXPECT_EQ(doc["folds"].size(), 5u);

  EXPECT_EQ(run({"eval", "--in", path("city.json"), "--family", "forest"}).code, kExitUsage);
  EXPECT_EQ(run({"eval", "--in", path("city.json"), "--mask", "000000"}).code, kExitUsage);

  const auto pcc = run({"pcc", "--in", path("city.json"), "--out", path("pcc.csv")});
  ASSERT_EQ(pcc.code, kExitOk) << pcc.err;
  EXPECT_NE(pcc.out.find("wrote 10 rows"), std::string::npos);

  ASSERT_EQ(run({"features", "--in", path("city.json"), "--out", path("f.csv")}).code, kExitOk);
  EXPECT_TRUE(fs::file_size(path("f.csv")) > 0);
}

TEST_F(CliTest, ServeWithoutModelIsUsageError) {
  ASSERT_EQ(run({"synth", "--out", path("city.json"), "--n", "100"}).code, kExitOk);
  EXPECT_EQ(run({"serve", "--in", path("city.json")}).code, kExitUsage);
  EXPECT_EQ(run({"serve", "--in", path("city.json"), "--model", path("none.json")}).code,
            kExitUsage);
}

TEST_F(CliTest, ServeOnBusyPortIsRuntimeError) {
  ASSERT_EQ(run({"synth", "--out", path("city.json"), "--n", "200"}).code, kExitOk);
  ASSERT_EQ(run({"train", "--in", path("city.json"), "--out", path("model.json"), "--iterations",
                 "5", "--max-depth", "3"})
                .code,
            kExitOk);

  const Service svc(load_dataset(path("city.json")), load_model(path("model.json")));
  HttpServer holder(svc);
  std::string error;
  ASSERT_TRUE(holder.bind("127.0.0.1", 0, error)) << error;
  const auto r = run({"serve", "--in", path("city.json"), "--model", path("model.json"), "--port",
                      std::to_string(holder.port())});
  EXPECT_EQ(r.code, kExitRuntime);
  EXPECT_NE(r.err.find("cannot bind"), std::string::npos);
}
