#include "hamkrr/io.hpp"

#include <gtest/gtest.h>

#include <filesystem>
#include <fstream>

#include "test_support.hpp"

namespace hamkrr {
namespace {

namespace fs = std::filesystem;

class IoTest : public ::testing::Test {
 protected:
  void SetUp() override {
    dir_ = fs::temp_directory_path() /
           ("hamkrr_io_" + std::string(::testing::UnitTest::GetInstance()->current_test_info()->name()));
    fs::remove_all(dir_);
    fs::create_directories(dir_);
  }
  void TearDown() override { fs::remove_all(dir_); }

  fs::path write_text(const std::string& name, const std::string& text) {
    const fs::path p = dir_ / name;
    std::ofstream(p) << text;
    return p;
  }

  fs::path dir_;
};

std::string error_of(const std::function<void()>& f) {
  try {
    f();
  } catch (const ValidationError& e) {
    return e.what();
  }
  return "";
}

TEST_F(IoTest, DatasetRoundTripIsExact) {
  const auto data =
      sample_dataset(builtin("double_pendulum"), 25, uniform_box(4, -3, 3), 0.3, 11);
  const fs::path p = dir_ / "d.hamdata.json";
  io::write_dataset(data, p);
  const auto back = io::read_dataset(p);
  EXPECT_EQ(back.d, data.d);
  EXPECT_EQ(back.sigma, data.sigma);
  EXPECT_EQ(back.seed, data.seed);
  EXPECT_EQ(back.system, data.system);
  EXPECT_EQ(back.box, data.box);
  EXPECT_EQ(back.points, data.points);
  EXPECT_EQ(back.observations, data.observations);
}

TEST_F(IoTest, DatasetWithoutSystemRoundTrips) {
  PortableRng rng(1);
  const auto data = testing::random_dataset(rng, 1, 3);
  io::write_dataset(data, dir_ / "x.json");
  EXPECT_FALSE(io::read_dataset(dir_ / "x.json").system.has_value());
  EXPECT_FALSE(fs::exists(dir_ / ("x.json.tmp." + std::to_string(::getpid()))));
}

TEST_F(IoTest, RowCountMismatchIsReported) {
  const auto p = write_text(
      "bad.json",
      R"({"d":1,"N":3,"sigma":0,"seed":0,"system":null,"box":[],)"
      R"("points":[[0,0],[1,1]],"observations":[[0,0],[1,1]]})");
  const std::string msg = error_of([&] { io::read_dataset(p); });
  EXPECT_NE(msg.find("declares 3 rows but 2"), std::string::npos) << msg;
}

TEST_F(IoTest, NegativeSigmaIsRejected) {
  const auto p = write_text(
      "bad.json",
      R"({"d":1,"N":1,"sigma":-0.1,"seed":0,"system":null,"box":[],)"
      R"("points":[[0,0]],"observations":[[0,0]]})");
  EXPECT_NE(error_of([&] { io::read_dataset(p); }).find("sigma"), std::string::npos);
}

TEST_F(IoTest, FieldErrorsCarryContext) {
  const auto p = write_text(
      "bad.json",
      R"({"d":1,"N":2,"sigma":0,"seed":0,"system":null,"box":[],)"
      R"("points":[[0,0],[1,"x"]],"observations":[[0,0],[1,1]]})");
  EXPECT_NE(error_of([&] { io::read_dataset(p); }).find("points[1][1]"), std::string::npos);
  const auto q = write_text("short.json", R"({"d":1,"N":1})");
  EXPECT_NE(error_of([&] { io::read_dataset(q); }).find("missing field 'sigma'"),
            std::string::npos);
  const auto r = write_text("broken.json", "{\"d\":");
  EXPECT_NE(error_of([&] { io::read_dataset(r); }).find("malformed JSON"), std::string::npos);
  EXPECT_NE(error_of([&] { io::read_dataset(dir_ / "missing.json"); }).find("cannot open"),
            std::string::npos);
}

TEST_F(IoTest, ModelRoundTripPreservesPredictions) {
  const auto data =
      sample_dataset(builtin("henon_heiles"), 20, uniform_box(4, -1, 1), 0.0, 2);
  const auto model = fit(data, GaussianKernel(1.5), 1e-4);
  io::write_model(model, dir_ / "m.json");
  const auto back = io::read_model(dir_ / "m.json");
  EXPECT_EQ(back.kernel.eta(), model.kernel.eta());
  EXPECT_EQ(back.lambda, model.lambda);
  EXPECT_EQ(back.coeffs, model.coeffs);
  PortableRng rng(3);
  for (int t = 0; t < 5; ++t) {
    const Vector z = testing::random_point(rng, 4, -1, 1);
    EXPECT_EQ(predict_h(back, z), predict_h(model, z));
  }
}

TEST_F(IoTest, ModelCoefficientLengthIsChecked) {
  const auto p = write_text(
      "m.json", R"({"kernel":{"eta":1},"lambda":0.1,"d":1,"n":1,"points":[[0,0]],"coeffs":[1]})");
  EXPECT_NE(error_of([&] { io::read_model(p); }).find("coeffs"), std::string::npos);
}

}  // namespace
}  // namespace hamkrr
