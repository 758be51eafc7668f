#include <doctest.h>

#include <cmath>
#include <filesystem>

#include "printers.hpp"
#include "moodkit/errors.hpp"
#include "moodkit/moodnet.hpp"
#include "toy_data.hpp"

using namespace moodkit;

namespace {

constexpr std::int64_t kFrames = 3;
constexpr std::int64_t kSize = 16;

MoodNet seeded(MoodModelKind kind, std::uint64_t seed = 7) {
  torch::manual_seed(seed);
  return build_mood_net(toy::toy_model(kind, kFrames, kSize));
}

}  // namespace

TEST_CASE("head and backbone defaults") {
  const ModelSpec spec;
  CHECK(spec.heads.mood_widths == std::vector<std::int64_t>{512, 256, 3});
  CHECK(spec.heads.delta_widths == std::vector<std::int64_t>{512, 256, 2});
  CHECK(spec.heads.dropout == 0.5);
  CHECK(spec.input_size == 112);
  BackboneSpec toy;
  CHECK(toy.resolved_output_dim() == 128);
  toy.family = BackboneFamily::resnet3d_18;
  CHECK(toy.resolved_output_dim() == 1024);
}

TEST_CASE("output shapes") {
  auto mood = seeded(MoodModelKind::resmood);
  auto emo = seeded(MoodModelKind::resmoodemo);
  mood->eval();
  emo->eval();
  const auto x = torch::rand({2, kFrames, 3, kSize, kSize});
  const auto a = mood->forward(x);
  CHECK(a.mood_logits.sizes() == torch::IntArrayRef{2, 3});
  CHECK_FALSE(a.delta_logits.defined());
  const auto b = emo->forward(x);
  CHECK(b.mood_logits.sizes() == torch::IntArrayRef{2, 3});
  CHECK(b.delta_logits.sizes() == torch::IntArrayRef{2, 2});
  CHECK_FALSE(mood->has_delta_head());
  CHECK(emo->has_delta_head());
}

TEST_CASE("zero clip gives the same finite logits across builds") {
  const auto x = torch::zeros({1, kFrames, 3, kSize, kSize});
  auto a = seeded(MoodModelKind::resmood);
  auto b = seeded(MoodModelKind::resmood);
  a->eval();
  b->eval();
  const auto la = a->mood_logits(x);
  CHECK(torch::isfinite(la).all().item<bool>());
  CHECK(torch::equal(la, b->mood_logits(x)));
}

TEST_CASE("identical clips give identical outputs") {
  auto emo = seeded(MoodModelKind::resmoodemo);
  emo->eval();
  const auto clip = torch::rand({1, kFrames, 3, kSize, kSize});
  const auto out = emo->forward(torch::cat({clip, clip}));
  CHECK(torch::equal(out.mood_logits[0], out.mood_logits[1]));
  CHECK(torch::equal(out.delta_logits[0], out.delta_logits[1]));
}

TEST_CASE("wrong clip shapes are structural errors") {
  auto net = seeded(MoodModelKind::resmood);
  CHECK_THROWS_AS(net->forward(torch::rand({1, kFrames + 1, 3, kSize, kSize})), StructuralError);
  CHECK_THROWS_AS(net->forward(torch::rand({1, kFrames, 1, kSize, kSize})), StructuralError);
  CHECK_THROWS_AS(net->forward(torch::rand({kFrames, 3, kSize, kSize})), StructuralError);
}

TEST_CASE("perturbing the delta head leaves mood logits unchanged") {
  auto emo = seeded(MoodModelKind::resmoodemo);
  emo->eval();
  const auto x = torch::rand({3, kFrames, 3, kSize, kSize});
  const auto before = emo->forward(x);
  {
    torch::NoGradGuard guard;
    for (auto& p : emo->delta_head()->parameters()) p.add_(torch::randn_like(p));
  }
  const auto after = emo->forward(x);
  CHECK(torch::equal(before.mood_logits, after.mood_logits));
  CHECK_FALSE(torch::equal(before.delta_logits, after.delta_logits));
}

TEST_CASE("joint loss examples") {
  const auto moods = torch::tensor({0, 2}, torch::kLong);
  const auto deltas = torch::tensor({1, 0}, torch::kLong);
  const auto uniform = joint_loss(torch::zeros({2, 3}), moods, torch::zeros({2, 2}), deltas);
  CHECK(uniform.item<double>() == doctest::Approx(std::log(3.0) + std::log(2.0)).epsilon(1e-6));
  CHECK(uniform.item<double>() == doctest::Approx(1.7918).epsilon(1e-4));

  auto sure_mood = torch::full({2, 3}, -1e4);
  sure_mood[0][0] = 1e4;
  sure_mood[1][2] = 1e4;
  auto sure_delta = torch::full({2, 2}, -1e4);
  sure_delta[0][1] = 1e4;
  sure_delta[1][0] = 1e4;
  CHECK(joint_loss(sure_mood, moods, sure_delta, deltas).item<double>() == doctest::Approx(0.0));

  const auto mood_only = joint_loss(torch::zeros({2, 3}), moods);
  CHECK(mood_only.item<double>() == doctest::Approx(std::log(3.0)).epsilon(1e-6));
}

TEST_CASE("joint loss errors") {
  const auto moods = torch::tensor({0, 2}, torch::kLong);
  CHECK_THROWS_AS(joint_loss(torch::zeros({2, 3}), moods, torch::zeros({2, 2}), torch::tensor({1, -1})),
                  DataError);
  CHECK_THROWS_AS(joint_loss(torch::zeros({2, 4}), moods), StructuralError);
  CHECK_THROWS_AS(joint_loss(torch::zeros({2, 3}), moods, torch::zeros({2, 3}), torch::tensor({1, 0})),
                  StructuralError);
}

TEST_CASE("joint loss is non-negative") {
  torch::manual_seed(4);
  for (int i = 0; i < 50; ++i) {
    const auto l = joint_loss(torch::randn({5, 3}) * 4, torch::randint(0, 3, {5}), torch::randn({5, 2}) * 4,
                              torch::randint(0, 2, {5}));
    CHECK(l.item<double>() >= 0.0);
  }
}

TEST_CASE("delta loss alone reaches the shared backbone") {
  auto emo = seeded(MoodModelKind::resmoodemo);
  emo->train();
  const auto x = torch::rand({4, kFrames, 3, kSize, kSize});
  const auto out = emo->forward(x);
  const auto delta_only = torch::nn::functional::cross_entropy(out.delta_logits, torch::tensor({0, 1, 1, 0}));
  delta_only.backward();
  double norm = 0.0;
  for (const auto& p : emo->backbone()->parameters()) {
    if (p.grad().defined()) norm += p.grad().abs().sum().item<double>();
  }
  CHECK(norm > 0.0);
  for (const auto& p : emo->mood_head()->parameters()) {
    CHECK((!p.grad().defined() || p.grad().abs().sum().item<double>() == 0.0));
  }
}

TEST_CASE("softmax of either head sums to one") {
  auto emo = seeded(MoodModelKind::resmoodemo);
  emo->eval();
  const auto out = emo->forward(torch::rand({5, kFrames, 3, kSize, kSize}));
  const auto m = torch::softmax(out.mood_logits, 1).sum(1);
  const auto d = torch::softmax(out.delta_logits, 1).sum(1);
  CHECK((m - 1).abs().max().item<double>() <= 1e-6);
  CHECK((d - 1).abs().max().item<double>() <= 1e-6);
}

TEST_CASE("every residual depth maps a clip to the 1024 representation") {
  for (const auto family : {BackboneFamily::resnet3d_18, BackboneFamily::resnet3d_34, BackboneFamily::resnet3d_50}) {
    BackboneSpec spec;
    spec.family = family;
    spec.base_width = 4;
    torch::manual_seed(1);
    auto backbone = make_backbone(spec);
    backbone->eval();
    const auto v = backbone->forward(torch::rand({2, kFrames, 3, kSize, kSize}));
    CHECK(v.sizes() == torch::IntArrayRef{2, 1024});
  }
}

TEST_CASE("resmoodemo training refuses clips without delta labels") {
  auto set = toy::brightness_clips(12, kFrames, kSize, 1);
  set.deltas[3] = -1;
  TrainConfig cfg;
  cfg.epochs = 1;
  cfg.batch_size = 4;
  CHECK_FALSE(set.all_deltas_present());
  CHECK_THROWS_AS(train_mood_model(set, set, toy::toy_model(MoodModelKind::resmoodemo, kFrames, kSize), cfg),
                  ConfigError);
  CHECK_NOTHROW(train_mood_model(set, set, toy::toy_model(MoodModelKind::resmood, kFrames, kSize), cfg));
}

TEST_CASE("training is deterministic and fits a small separable set") {
  const auto train = toy::brightness_clips(48, kFrames, kSize, 2);
  const auto val = toy::brightness_clips(24, kFrames, kSize, 3);
  TrainConfig cfg;
  cfg.epochs = 12;
  cfg.batch_size = 16;
  cfg.learning_rate = 3e-3;
  cfg.lr_decay_every = 6;
  const auto spec = toy::toy_model(MoodModelKind::resmoodemo, kFrames, kSize);
  const auto a = train_mood_model(train, val, spec, cfg);
  const auto b = train_mood_model(train, val, spec, cfg);
  REQUIRE(a.history.size() == 12);
  for (std::size_t i = 0; i < a.history.size(); ++i) {
    CHECK(a.history[i].loss == b.history[i].loss);
    CHECK(a.history[i].val_f1 == b.history[i].val_f1);
  }
  CHECK(a.history[6].learning_rate == doctest::Approx(3e-4));
  CHECK(a.train_f1 >= 0.9);

  SUBCASE("checkpoint round-trip") {
    const auto path = std::filesystem::temp_directory_path() / "moodkit_moodnet_test.pt";
    auto model = a.model;
    save_mood_net(path, model, "resmoodemo", "h");
    std::string kind;
    auto loaded = load_mood_net(path, &kind);
    CHECK(kind == "resmoodemo");
    CHECK(predict_moods(loaded, val) == predict_moods(model, val));
    CHECK(predict_deltas(loaded, val) == predict_deltas(model, val));
    std::filesystem::remove(path);
    std::filesystem::remove(path.string() + ".json");
  }
}

TEST_CASE("split by video keeps videos whole") {
  std::vector<ClipSpec> clips;
  for (int v = 0; v < 10; ++v) {
    for (int w = 0; w < 4; ++w) {
      ClipSpec c;
      c.video_id = "vid" + std::to_string(v);
      c.window_start = w * 3;
      c.mood = mood_from_class(v % 3);
      clips.push_back(c);
    }
  }
  const auto [train, val] = split_by_video(clips, 0.3, 11);
  CHECK(train.size() + val.size() == clips.size());
  CHECK_FALSE(train.empty());
  for (const auto& a : train) {
    for (const auto& b : val) CHECK(a.video_id != b.video_id);
  }
  const auto again = split_by_video(clips, 0.3, 11);
  CHECK(again.second.size() == val.size());
}
