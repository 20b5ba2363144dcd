// Copyright (c) 2026 The oneshot Authors
// SPDX-License-Identifier: Apache-2.0

#include <gtest/gtest.h>

#include <cstdio>

#include "oneshot/dataio.hpp"
#include "oneshot/error.hpp"
#include "oneshot/image.hpp"
#include "support.hpp"

using namespace oneshot;
using oneshot::testing::synthetic_scene;
using oneshot::testing::TempDir;

namespace {

void write_frames(const std::filesystem::path& dir, int n, std::int64_t h, std::int64_t w) {
  std::filesystem::create_directories(dir);
  char name[32];
  for (int i = 0; i < n; ++i) {
    std::snprintf(name, sizeof(name), "frame_%05d.png", i + 1);
    write_png(dir / name, synthetic_scene(h, w, 0.05 * i));
  }
}

AugmentationPolicy only(double flip, double brightness, double saturation, double contrast, double translation,
                        double cutout) {
  AugmentationPolicy p;
  p.apply_prob = 1.0;
  p.horizontal_flip_prob = flip;
  p.brightness = brightness;
  p.saturation = saturation;
  p.contrast = contrast;
  p.translation_frac = translation;
  p.cutout_frac = cutout;
  return p;
}

}  // namespace

TEST(LoadFrames, VideoDirectoryKeepsEveryFrameInNameOrder) {
  TempDir dir;
  write_frames(dir.path(), 80, 18, 32);
  auto fs = load_frames(dir.path(), SourceMode::kSingleVideo);
  EXPECT_EQ(fs.size(), 80);
  EXPECT_EQ(fs.resolution(), (Resolution{18, 32}));
  EXPECT_EQ(fs.mode(), SourceMode::kSingleVideo);
  // frame_00003.png holds phase 0.10.
  auto expected = read_image(dir / "frame_00003.png");
  EXPECT_TRUE(torch::equal(fs.frame(2), expected));
}

TEST(LoadFrames, SingleJpeg) {
  TempDir dir;
  write_jpeg(dir / "photo.jpg", synthetic_scene(24, 40));
  auto fs = load_frames(dir / "photo.jpg", SourceMode::kSingleImage);
  EXPECT_EQ(fs.size(), 1);
  EXPECT_GE(fs.frames().min().item<float>(), -1.0f);
  EXPECT_LE(fs.frames().max().item<float>(), 1.0f);
}

TEST(LoadFrames, MixedResolutionsListOffenders) {
  TempDir dir;
  write_png(dir / "a.png", synthetic_scene(36, 64));
  write_png(dir / "b.png", synthetic_scene(18, 32));
  try {
    load_frames(dir.path(), SourceMode::kSingleVideo);
    FAIL();
  } catch (const ValidationError& e) {
    EXPECT_NE(std::string(e.what()).find("b.png"), std::string::npos) << e.what();
  }
}

TEST(LoadFrames, EmptyDirectoryAndBadPaths) {
  TempDir dir;
  EXPECT_THROW(load_frames(dir.path(), SourceMode::kSingleVideo), ValidationError);
  try {
    load_frames(dir / "nope.png", SourceMode::kSingleImage);
    FAIL();
  } catch (const InputError& e) {
    EXPECT_NE(std::string(e.what()).find("nope.png"), std::string::npos);
  }
  // A directory passed in single-image mode is an input error too.
  EXPECT_ANY_THROW(load_frames(dir.path(), SourceMode::kSingleImage));
}

TEST(LoadFrames, SingleFrameIsNotAVideo) {
  TempDir dir;
  write_frames(dir.path(), 1, 8, 8);
  EXPECT_THROW(load_frames(dir.path(), SourceMode::kSingleVideo), ValidationError);
}

TEST(TrainingResolution, WorkedExamples) {
  // Independent arithmetic: 1080 * 192 / 1920 = 108, floor to 16 -> 96.
  EXPECT_EQ(training_resolution({1080, 1920}, 192, 16), (Resolution{96, 192}));
  EXPECT_EQ(training_resolution({256, 256}, 128, 16), (Resolution{128, 128}));
  EXPECT_THROW(training_resolution({100, 100}, 64, 128), ValidationError);
  // Portrait: long side is the height.
  EXPECT_EQ(training_resolution({1920, 1080}, 192, 16), (Resolution{192, 96}));
  // Very wide strip: short side drops below the divisor.
  EXPECT_THROW(training_resolution({10, 1000}, 64, 16), ValidationError);
}

TEST(TrainingResolution, PropertyDivisibleAndBounded) {
  Rng rng(11);
  for (int i = 0; i < 200; ++i) {
    Resolution native{rng.uniform_int(20, 3000), rng.uniform_int(20, 3000)};
    const std::int64_t divisor = std::int64_t{1} << rng.uniform_int(0, 4);
    const auto max_side = rng.uniform_int(divisor, 256);
    Resolution r;
    try {
      r = training_resolution(native, max_side, divisor);
    } catch (const ValidationError&) {
      continue;
    }
    ASSERT_EQ(r.height % divisor, 0);
    ASSERT_EQ(r.width % divisor, 0);
    ASSERT_LE(std::max(r.height, r.width), max_side);
    ASSERT_GT(std::max(r.height, r.width), max_side - divisor);
  }
}

TEST(TrainingResolution, ResizesAllFramesIdentically) {
  auto frame = synthetic_scene(54, 96);
  FrameSet fs(torch::stack({frame, frame}), "x", {54, 96}, SourceMode::kSingleVideo);
  auto out = to_training_resolution(fs, 64, 16);
  EXPECT_EQ(out.resolution(), (Resolution{32, 64}));
  EXPECT_EQ(out.native_resolution(), (Resolution{54, 96}));
  EXPECT_TRUE(torch::equal(out.frame(0), out.frame(1)));
  EXPECT_GE(out.frames().min().item<float>(), -1.0f);
  EXPECT_LE(out.frames().max().item<float>(), 1.0f);
}

TEST(Augment, ZeroApplyProbIsIdentity) {
  auto image = synthetic_scene(32, 32);
  Rng rng(1);
  for (int i = 0; i < 20; ++i) {
    auto a = augment(image, AugmentationPolicy::identity(), rng);
    ASSERT_TRUE(torch::equal(a.image, image));
    ASSERT_TRUE(a.descriptor.empty());
  }
}

TEST(Augment, FlipSwapsHalves) {
  auto image = torch::full({3, 8, 8}, -1.0f);
  image.index_put_({torch::indexing::Slice(), torch::indexing::Slice(), torch::indexing::Slice(4, 8)}, 1.0f);
  Rng rng(2);
  auto a = augment(image, only(1.0, 0, 0, 0, 0, 0), rng);
  ASSERT_TRUE(a.descriptor.flip);
  using torch::indexing::Slice;
  EXPECT_EQ(a.image.index({Slice(), Slice(), Slice(0, 4)}).min().item<float>(), 1.0f);
  EXPECT_EQ(a.image.index({Slice(), Slice(), Slice(4, 8)}).max().item<float>(), -1.0f);
}

TEST(Augment, DeterministicGivenSeed) {
  auto image = synthetic_scene(32, 48);
  AugmentationPolicy p;
  p.apply_prob = 0.7;
  for (std::uint64_t seed = 0; seed < 10; ++seed) {
    Rng a(seed), b(seed);
    auto x = augment(image, p, a);
    auto y = augment(image, p, b);
    ASSERT_TRUE(torch::equal(x.image, y.image));
    ASSERT_EQ(x.descriptor, y.descriptor);
  }
}

TEST(Augment, DescriptorReplaysBitForBitAndStaysInRange) {
  auto image = synthetic_scene(32, 48);
  AugmentationPolicy p;
  p.apply_prob = 0.8;
  Rng rng(3);
  int fired = 0;
  for (int i = 0; i < 50; ++i) {
    auto a = augment(image, p, rng);
    fired += !a.descriptor.empty();
    ASSERT_TRUE(torch::equal(apply_augmentation(image, a.descriptor), a.image)) << a.descriptor.to_string();
    ASSERT_GE(a.image.min().item<float>(), -1.0f);
    ASSERT_LE(a.image.max().item<float>(), 1.0f);
    ASSERT_EQ(a.image.sizes(), image.sizes());
  }
  EXPECT_GT(fired, 40);
}

TEST(Augment, TranslationZeroPadsAndCutoutZeroes) {
  auto image = torch::full({3, 8, 8}, 0.5f);
  AugmentationDescriptor d;
  d.translation = AugmentationDescriptor::Shift{2, -3};
  auto t = apply_augmentation(image, d);
  using torch::indexing::Slice;
  // Content moves down 2 and left 3; vacated rows/cols hold 0 in [-1, 1] space.
  EXPECT_EQ(t.index({Slice(), Slice(0, 2), Slice()}).abs().max().item<float>(), 0.0f);
  EXPECT_EQ(t.index({Slice(), Slice(), Slice(5, 8)}).abs().max().item<float>(), 0.0f);
  EXPECT_EQ(t.index({Slice(), Slice(2, 8), Slice(0, 5)}).min().item<float>(), 0.5f);

  AugmentationDescriptor c;
  c.cutout = AugmentationDescriptor::Square{1, 2, 3};
  auto u = apply_augmentation(image, c);
  EXPECT_EQ(u.index({Slice(), Slice(1, 4), Slice(2, 5)}).abs().max().item<float>(), 0.0f);
  EXPECT_EQ((u != 0.5f).sum().item<int64_t>(), 3 * 9);
}

TEST(Augment, ColorOpsAreDifferentiable) {
  auto image = synthetic_scene(16, 16).to(torch::kFloat64).mul(0.5).requires_grad_(true);
  AugmentationDescriptor d;
  d.brightness = 0.05;
  d.saturation = 1.1;
  d.contrast = 0.9;
  d.flip = true;
  d.translation = AugmentationDescriptor::Shift{1, 1};
  auto y = apply_augmentation(image, d);
  const double err = oneshot::testing::max_gradient_error(
      [&] { return (apply_augmentation(image, d) * torch::linspace(0, 1, y.numel(), torch::kFloat64).view(y.sizes())).sum(); },
      image, 60);
  EXPECT_LT(err, 1e-6);
}

TEST(Augment, PolicyValidation) {
  AugmentationPolicy p;
  p.apply_prob = 1.5;
  EXPECT_THROW(p.validate(), ValidationError);
  p = {};
  p.translation_frac = 0.9;
  EXPECT_THROW(p.validate(), ValidationError);
}

TEST(SampleBatch, SingleFrameFiveCopies) {
  auto image = synthetic_scene(16, 16);
  auto fs = oneshot::testing::single_frame(image);
  Rng rng(4);
  auto b = sample_batch(fs, AugmentationPolicy::identity(), 5, rng);
  ASSERT_EQ(b.images.size(0), 5);
  for (int i = 0; i < 5; ++i) {
    EXPECT_TRUE(torch::equal(b.images[i], image));
    EXPECT_EQ(b.provenance[static_cast<std::size_t>(i)].frame_index, 0);
  }
  AugmentationPolicy p;
  p.apply_prob = 1.0;
  auto c = sample_batch(fs, p, 5, rng);
  int distinct = 0;
  for (int i = 1; i < 5; ++i) distinct += !torch::equal(c.images[i], c.images[0]);
  EXPECT_GT(distinct, 0);
}

TEST(SampleBatch, IndicesInRangeAndReplayable) {
  std::vector<torch::Tensor> frames;
  for (int i = 0; i < 80; ++i) frames.push_back(synthetic_scene(16, 16, 0.01 * i));
  FrameSet fs(torch::stack(frames), "v", {16, 16}, SourceMode::kSingleVideo);
  Rng rng(5);
  AugmentationPolicy p;
  auto b = sample_batch(fs, p, 5, rng);
  ASSERT_EQ(b.images.size(0), 5);
  for (std::size_t i = 0; i < 5; ++i) {
    const auto& pv = b.provenance[i];
    ASSERT_GE(pv.frame_index, 0);
    ASSERT_LT(pv.frame_index, 80);
    EXPECT_TRUE(torch::equal(apply_augmentation(fs.frame(pv.frame_index), pv.augmentation),
                             b.images[static_cast<std::int64_t>(i)]));
  }
  EXPECT_THROW(sample_batch(fs, p, 0, rng), ValidationError);
}

TEST(FrameSetInvariants, RejectsBadConstruction) {
  auto img = synthetic_scene(8, 8);
  EXPECT_THROW(FrameSet(torch::stack({img, img}), "x", {8, 8}, SourceMode::kSingleImage), ValidationError);
  EXPECT_THROW(FrameSet((img * 2).unsqueeze(0), "x", {8, 8}, SourceMode::kSingleImage), ValidationError);
}
