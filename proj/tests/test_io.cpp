// Copyright 2026 The smoothcomp Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#include <gtest/gtest.h>

#include <filesystem>
#include <fstream>

#include "oracles.hpp"
#include "smoothcomp/compress.hpp"
#include "smoothcomp/io/data.hpp"
#include "smoothcomp/io/model_file.hpp"
#include "smoothcomp/nn/presets.hpp"

using namespace smoothcomp;
namespace fs = std::filesystem;

namespace {

std::vector<unsigned char> bytes_of(const std::string& s) { return {s.begin(), s.end()}; }

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

class TempDir : public ::testing::Test {
 protected:
  void SetUp() override {
    dir_ = fs::temp_directory_path() / ("smoothcomp_io_" + std::to_string(::getpid()) + "_" +
                                        ::testing::UnitTest::GetInstance()->current_test_info()->name());
    fs::create_directories(dir_);
  }
  void TearDown() override { fs::remove_all(dir_); }
  fs::path dir_;
};

}  // namespace

TEST(Pgm, AsciiAndBinary) {
  const Tensor expect({1, 2, 2}, std::vector<double>{0, 1, 1, 0});
  EXPECT_EQ(io::parse_pgm(bytes_of("P2\n# comment\n2 2\n255\n0 255\n255 0\n")), expect);
  std::string p5 = "P5 2 2 255\n";
  p5 += std::string{'\x00', '\xff', '\xff', '\x00'};
  EXPECT_EQ(io::parse_pgm(bytes_of(p5)), expect);
}

TEST(Pgm, MalformedReportsOffset) {
  try {
    io::parse_pgm(bytes_of("P5 2 2 255\n\x01"));
    FAIL();
  } catch (const DataError& e) {
    EXPECT_GT(e.offset(), 0u);
    EXPECT_NE(std::string(e.what()).find("byte offset"), std::string::npos);
  }
  EXPECT_THROW(io::parse_pgm(bytes_of("P2 2 2 255 0 1 2 300")), DataError);
  EXPECT_THROW(io::parse_pgm(bytes_of("P3 1 1 255 0")), DataError);
}

TEST(Idx, RoundTripAndMagic) {
  Tensor imgs({3, 1, 2, 2});
  for (std::size_t i = 0; i < imgs.size(); ++i) imgs[i] = static_cast<double>(i * 20) / 255.0;
  auto enc = io::encode_idx_images(imgs);
  EXPECT_EQ(enc[2], 0x08);
  EXPECT_EQ(enc[3], 0x03);
  EXPECT_LT(max_abs_diff(io::parse_idx_images(enc), imgs), 1e-15);
  const std::vector<std::size_t> labels{0, 2, 1};
  EXPECT_EQ(io::parse_idx_labels(io::encode_idx_labels(labels)), labels);
  enc[3] = 0x01;
  EXPECT_THROW(io::parse_idx_images(enc), DataError);
  EXPECT_THROW(io::parse_idx_labels(io::encode_idx_images(imgs)), DataError);
  auto truncated = io::encode_idx_labels(labels);
  truncated.pop_back();
  EXPECT_THROW(io::parse_idx_labels(truncated), DataError);
}

TEST(Synth, GradientFormula) {
  const Tensor g = io::synth_gradient(8);
  for (std::size_t y = 0; y < 8; ++y)
    for (std::size_t x = 0; x < 8; ++x) EXPECT_DOUBLE_EQ(g[y * 8 + x], static_cast<double>(x + y) / 14.0);
}

TEST(Synth, BlobsAndRingsAreSeeded) {
  const Tensor b = io::synth_blobs(16, 3);
  EXPECT_EQ(b, io::synth_blobs(16, 3));
  EXPECT_NE(b, io::synth_blobs(16, 4));
  double mx = 0, mn = 1;
  for (double v : b.data()) mx = std::max(mx, v), mn = std::min(mn, v);
  EXPECT_EQ(mx, 1.0);
  EXPECT_GE(mn, 0.0);
  const auto r = io::synth_rings(10, 12, 5);
  EXPECT_EQ(r.inputs.shape(), (Shape{10, 1, 12, 12}));
  EXPECT_EQ(r.labels[0], 0u);
  EXPECT_EQ(r.labels[1], 1u);
  EXPECT_EQ(r.inputs, io::synth_rings(10, 12, 5).inputs);
}

TEST(Coordinates, GridAndSubsampling) {
  const Tensor img = io::synth_gradient(8);
  const auto full = io::coordinate_dataset(img);
  EXPECT_EQ(full.inputs.shape(), (Shape{64, 2}));
  EXPECT_EQ(full.inputs(0, 0), -1.0);
  EXPECT_EQ(full.inputs(63, 1), 1.0);
  EXPECT_EQ(io::pixels_to_image(full.targets, 8, 8), img);
  const auto sub = io::coordinate_dataset(img, 4);
  EXPECT_EQ(sub.size(), 4u);
  EXPECT_DOUBLE_EQ(sub.targets(3, 0), 8.0 / 14.0);
}

TEST_F(TempDir, PngRoundTrip) {
  Tensor img({3, 4, 5});
  for (std::size_t i = 0; i < img.size(); ++i) img[i] = static_cast<double>(i % 256) / 255.0;
  io::write_png((dir_ / "a.png").string(), img);
  EXPECT_LT(max_abs_diff(io::ingest_image((dir_ / "a.png").string()), img), 1e-15);
  const Tensor gray = io::synth_gradient(6);
  io::write_png((dir_ / "g.png").string(), gray);
  EXPECT_EQ(io::ingest_image((dir_ / "g.png").string()).shape(), (Shape{1, 6, 6}));
  std::ofstream(dir_ / "bad.png") << "\x89PNG garbage";
  EXPECT_THROW(io::ingest_image((dir_ / "bad.png").string()), DataError);
  EXPECT_THROW(io::ingest_image((dir_ / "missing.png").string()), DataError);
}

TEST_F(TempDir, ModelFileRoundTripIsByteIdentical) {
  const nn::Model base = nn::make_inr(nn::InrPreset{2, 3, 10, 2, 30.0, 30.0}, 1);
  const auto joint = compress::compress_joint_stacked(base, nn::inr_hidden_layers(base), 4).model;
  for (const nn::Model* m : {&base, &joint}) {
    nlohmann::ordered_json prov;
    prov["task"] = "inr";
    prov["lambda"] = 0.1;
    prov["seed"] = 0;
    io::save_model(dir_ / "a" / "m", *m, prov);
    const auto loaded = io::load_model(dir_ / "a" / "m.json");
    EXPECT_EQ(loaded.model.layers().size(), m->layers().size());
    EXPECT_EQ(loaded.model.parameter_count(), m->parameter_count());
    EXPECT_EQ(loaded.provenance, prov);
    io::save_model(dir_ / "b" / "m", loaded.model, loaded.provenance);
    EXPECT_EQ(slurp(dir_ / "a" / "m.bin"), slurp(dir_ / "b" / "m.bin"));
    EXPECT_EQ(slurp(dir_ / "a" / "m.json"), slurp(dir_ / "b" / "m.json"));
    EXPECT_EQ(fs::file_size(dir_ / "a" / "m.bin"), m->parameter_count() * 4);
  }
  // float32 storage: values survive to single precision
  const auto l = io::load_model(dir_ / "a" / "m");
  EXPECT_LT(max_abs_diff(l.model.params()[1].weight, joint.params()[1].weight), 1e-6);
  EXPECT_EQ(l.model.layer(2).slot, l.model.layer(5).slot);
}

TEST_F(TempDir, ModelFileLengthMismatchRejected) {
  const nn::Model m = nn::make_classifier(nn::ClassifyPreset{}, 2);
  io::save_model(dir_ / "c", m);
  fs::resize_file(dir_ / "c.bin", fs::file_size(dir_ / "c.bin") - 4);
  EXPECT_THROW(io::load_model(dir_ / "c"), DataError);
  EXPECT_THROW(io::load_model(dir_ / "nothing"), DataError);
}
