// Acceptance run: one PASS/FAIL line per criterion.
//
//   moodkit_acceptance [--configs DIR] [--workdir DIR] [--only N,...]

#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <map>
#include <random>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <torch/torch.h>

#include "../oracles.hpp"
#include "../unit/toy_data.hpp"
#include "moodkit/annotations.hpp"
#include "moodkit/distill.hpp"
#include "moodkit/jsonl.hpp"
#include "moodkit/log.hpp"
#include "moodkit/metrics.hpp"
#include "moodkit/moodnet.hpp"
#include "moodkit/pipeline.hpp"
#include "moodkit/sampler.hpp"
#include "moodkit/siamese.hpp"

using namespace moodkit;
namespace fs = std::filesystem;

namespace {

using Clock = std::chrono::steady_clock;

struct Outcome {
  bool pass = false;
  std::string detail;
};

double seconds_since(Clock::time_point start) {
  return std::chrono::duration<double>(Clock::now() - start).count();
}

std::string fmt(const char* format, double v) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), format, v);
  return buf;
}

// Collects named comparisons against a tolerance and reports the worst one.
struct Tally {
  double tolerance;
  double worst = 0.0;
  std::string worst_name;
  int count = 0;

  void check(const std::string& name, double got, double expected) {
    const double err = std::isfinite(got) ? std::abs(got - expected) : INFINITY;
    ++count;
    if (err > worst || worst_name.empty()) {
      worst = err;
      worst_name = name;
    }
  }
  bool ok() const { return worst <= tolerance; }
};

torch::Tensor f64(std::vector<double> v) { return torch::tensor(v, torch::kDouble); }

// ---------------------------------------------------------------------------

Outcome loss_oracles() {
  const auto start = Clock::now();
  Tally t{1e-6};
  t.check("contrastive(1|1)", contrastive_loss(f64({1.0}), torch::tensor({1}), 0.25).item<double>(), 0.0);
  t.check("contrastive(0.5|0)", contrastive_loss(f64({0.5}), torch::tensor({0}), 0.25).item<double>(), 0.25);
  t.check("contrastive(0.1|0)", contrastive_loss(f64({0.1}), torch::tensor({0}), 0.25).item<double>(), 0.0);
  {
    const std::vector<double> d{0.9, -0.2, 0.6, 0.3, 0.05};
    const std::vector<int> y{1, 0, 0, 1, 0};
    t.check("contrastive(batch)", contrastive_loss(d, y, 0.25), oracle::contrastive(d, y, 0.25));
  }
  t.check("total(0.7,0.3,0.5)", total_siamese_loss(0.7, 0.3, 0.5), 0.5);
  for (const double lambda : {0.0, 0.3, 1.0}) t.check("total(x,x)", total_siamese_loss(0.37, 0.37, lambda), 0.37);
  t.check("total(tensor)", total_siamese_loss(f64({0.7}), f64({0.3}), 0.5).item<double>(), 0.5);

  const auto moods = torch::tensor({0, 1, 2}, torch::kLong);
  const auto deltas = torch::tensor({1, 0, 1}, torch::kLong);
  t.check("joint(uniform)", joint_loss(torch::zeros({3, 3}, torch::kDouble), moods,
                                       torch::zeros({3, 2}, torch::kDouble), deltas).item<double>(),
          std::log(3.0) + std::log(2.0));
  t.check("joint(mood only)", joint_loss(torch::zeros({3, 3}, torch::kDouble), moods).item<double>(), std::log(3.0));
  {
    auto m = torch::full({3, 3}, -200.0, torch::kDouble);
    auto d = torch::full({3, 2}, -200.0, torch::kDouble);
    for (int i = 0; i < 3; ++i) {
      m[i][moods[i].item<std::int64_t>()] = 200.0;
      d[i][deltas[i].item<std::int64_t>()] = 200.0;
    }
    t.check("joint(certain)", joint_loss(m, moods, d, deltas).item<double>(), 0.0);
    const auto logits = std::vector<double>{0.3, -1.2, 2.0};
    const auto dl = std::vector<double>{0.7, -0.4};
    t.check("joint(random)",
            joint_loss(f64(logits).view({1, 3}), torch::tensor({2}), f64(dl).view({1, 2}), torch::tensor({0}))
                .item<double>(),
            oracle::cross_entropy(logits, 2) + oracle::cross_entropy(dl, 0));
  }

  for (const auto p : soft_targets(std::vector<double>{4.0, 4.0, 4.0}, 3.0)) t.check("soft(c,c,c)", p, 1.0 / 3.0);
  {
    const auto p = soft_targets(std::vector<double>{2.0, 0.0}, 2.0);
    const double e = std::exp(1.0);
    t.check("soft(2,0;T=2)[0]", p[0], e / (e + 1.0));
    t.check("soft(2,0;T=2)[1]", p[1], 1.0 / (e + 1.0));
    const auto tensor = soft_targets(f64({2.0, 0.0}), 2.0);
    t.check("soft tensor", tensor[0].item<double>(), e / (e + 1.0));
  }
  Tally limit{1e-5};
  for (const auto p : soft_targets(std::vector<double>{3.0, -1.0, 0.5}, 1e6)) limit.check("soft(T=1e6)", p, 1.0 / 3.0);

  t.check("distill(identical)", distillation_loss(f64({2, 0, 0}), f64({2, 0, 0}), 3.0).item<double>(), 0.0);
  t.check("distill(oracle)", distillation_loss(f64({0, 2, 0}), f64({2, 0, 0}), 3.0).item<double>(),
          oracle::distillation({0, 2, 0}, {2, 0, 0}, 3.0));
  t.check("distill(oracle T=7)", distillation_loss(f64({1.5, -0.5, 0.2}), f64({-1, 0.3, 2.2}), 7.0).item<double>(),
          oracle::distillation({1.5, -0.5, 0.2}, {-1, 0.3, 2.2}, 7.0));
  t.check("ts(1,2,0.05)", ts_total_loss(1.0, 2.0, 0.05), 1.95);
  t.check("ts(alpha=1)", ts_total_loss(0.8, 5.0, 1.0), 0.8);
  t.check("ts(tensor)", ts_total_loss(f64({1.0}), f64({2.0}), 0.05).item<double>(), 1.95);

  const double secs = seconds_since(start);
  const bool ok = t.ok() && limit.ok() && secs < 1.0;
  return {ok, std::to_string(t.count + limit.count) + " values, max |err| " + fmt("%.2e", t.worst) + " (" +
                  t.worst_name + "), large-T max |err| " + fmt("%.2e", limit.worst) + ", " + fmt("%.3f", secs) +
                  " s"};
}

// ---------------------------------------------------------------------------

std::vector<torch::Tensor> trainable(torch::nn::Module& m) {
  std::vector<torch::Tensor> out;
  for (auto& p : m.parameters()) {
    if (p.requires_grad()) out.push_back(p);
  }
  return out;
}

Outcome gradient_checks() {
  const auto start = Clock::now();
  constexpr int kDirections = 60;
  struct Row {
    std::string name;
    oracle::GradCheck r;
  };
  std::vector<Row> rows;

  {
    SiameseSpec spec;
    spec.encoder = "linear";
    spec.embedding_dim = 6;
    spec.head_widths = {5, 2};
    spec.dropout = 0.0;
    spec.image_size = 3;
    torch::manual_seed(3);
    auto net = build_siamese(spec);
    net->to(torch::kDouble);
    net->eval();
    auto gen = at::make_generator<at::CPUGeneratorImpl>(1);
    const auto a = torch::rand({6, 3, 3, 3}, gen, torch::kDouble);
    const auto b = torch::rand({6, 3, 3, 3}, gen, torch::kDouble);
    const auto y = torch::tensor({1, 0, 1, 0, 0, 1}, torch::kLong);
    rows.push_back({"siamese", oracle::check_gradients(trainable(*net), [&] {
                      return siamese_objective(net->forward(a, b), y, spec);
                    }, kDirections, 11)});
  }
  const auto model = [](MoodModelKind kind) {
    auto spec = toy::toy_model(kind, 3, 8);
    spec.heads.dropout = 0.0;
    return spec;
  };
  auto gen = at::make_generator<at::CPUGeneratorImpl>(2);
  const auto x = torch::rand({4, 3, 3, 8, 8}, gen, torch::kDouble);
  const auto m = torch::tensor({0, 1, 2, 1}, torch::kLong);
  const auto d = torch::tensor({1, 0, 0, 1}, torch::kLong);
  {
    torch::manual_seed(4);
    auto net = build_mood_net(model(MoodModelKind::resmood));
    net->to(torch::kDouble);
    net->eval();
    rows.push_back({"resmood", oracle::check_gradients(trainable(*net), [&] {
                      return joint_loss(net->mood_logits(x), m);
                    }, kDirections, 12)});
  }
  {
    torch::manual_seed(4);
    auto net = build_mood_net(model(MoodModelKind::resmoodemo));
    net->to(torch::kDouble);
    net->eval();
    rows.push_back({"resmoodemo", oracle::check_gradients(trainable(*net), [&] {
                      const auto out = net->forward(x);
                      return joint_loss(out.mood_logits, m, out.delta_logits, d);
                    }, kDirections, 13)});
  }
  {
    torch::manual_seed(5);
    auto teacher = build_mood_net(model(MoodModelKind::resmoodemo));
    auto student = build_mood_net(model(MoodModelKind::resmood));
    teacher->to(torch::kDouble);
    student->to(torch::kDouble);
    teacher->eval();
    student->eval();
    for (auto& p : teacher->parameters()) p.set_requires_grad(false);
    const auto soft = teacher->mood_logits(x);
    rows.push_back({"teacher-student", oracle::check_gradients(trainable(*student), [&] {
                      const auto logits = student->mood_logits(x);
                      return ts_total_loss(torch::nn::functional::cross_entropy(logits, m),
                                           distillation_loss(logits, soft, 3.0), 0.05);
                    }, kDirections, 14)});
  }
  const double secs = seconds_since(start);
  bool ok = secs < 60.0;
  std::string detail;
  for (const auto& row : rows) {
    ok = ok && row.r.directions >= 50 && row.r.max_rel_error <= 1e-4;
    detail += row.name + " " + fmt("%.1e", row.r.max_rel_error) + " (" + std::to_string(row.r.directions) + " dirs), ";
  }
  return {ok, detail + fmt("%.1f", secs) + " s"};
}

// ---------------------------------------------------------------------------

Outcome label_oracles() {
  const auto start = Clock::now();
  std::mt19937_64 rng(2718);
  const double levels[] = {-1.0, -0.7, -0.31, -0.3, 0.0, 0.3, 0.31, 0.8, 1.0};
  int mood_mismatch = 0;
  for (int trial = 0; trial < 1000; ++trial) {
    const auto n = 1 + rng() % 80;
    AnnotationTrack track;
    track.video_id = "v";
    std::vector<double> values;
    std::size_t cur = rng() % 9;
    for (std::size_t i = 0; i < n; ++i) {
      if (rng() % 4 == 0) cur = rng() % 9;
      values.push_back(levels[cur]);
      track.records.push_back({static_cast<std::int64_t>(i), levels[cur], {}, {}});
    }
    if (mood_value(derive_mood_label(track)) != oracle::mood_label(values)) ++mood_mismatch;
  }
  int clip_mismatch = 0;
  int grid = 0;
  for (std::int64_t F = 1; F <= 2000; F += 37) {
    for (const std::int64_t t : {2, 5, 50, 100, 150, 200, 333}) {
      for (const std::int64_t s : {1, 2, 3, 7, 25}) {
        ++grid;
        const auto clips = generate_clips("v", F, SamplerConfig{t, s, 2}, Mood::neutral);
        const auto starts = oracle::clip_starts(F, t, s);
        bool same = clips.size() == starts.size();
        for (std::size_t i = 0; same && i < clips.size(); ++i) same = clips[i].window_start == starts[i];
        if (!same) ++clip_mismatch;
      }
    }
  }
  const double secs = seconds_since(start);
  return {mood_mismatch == 0 && clip_mismatch == 0 && secs < 10.0,
          "mood mismatches " + std::to_string(mood_mismatch) + "/1000, clip mismatches " +
              std::to_string(clip_mismatch) + "/" + std::to_string(grid) + ", " + fmt("%.2f", secs) + " s"};
}

Outcome metric_oracle() {
  std::mt19937_64 rng(31);
  double worst = 0.0;
  for (int trial = 0; trial < 1000; ++trial) {
    const int k = 2 + static_cast<int>(rng() % 2);
    const auto n = 1 + rng() % 60;
    std::vector<int> pred(n);
    std::vector<int> truth(n);
    for (std::size_t i = 0; i < n; ++i) {
      pred[i] = static_cast<int>(rng() % k);
      truth[i] = static_cast<int>(rng() % k);
    }
    worst = std::max(worst, std::abs(weighted_f1(pred, truth) - oracle::weighted_f1(pred, truth)));
  }
  return {worst <= 1e-9, "1000 vectors, max |err| " + fmt("%.2e", worst)};
}

// ---------------------------------------------------------------------------

struct Runner {
  fs::path config;
  fs::path workdir;
  std::vector<std::string> overrides;

  int operator()(const std::vector<std::string>& command) const {
    std::vector<std::string> args{"moodkit", "-c", config.string(), "-w", workdir.string(), "--log-level", "error"};
    for (const auto& o : overrides) {
      args.push_back("-s");
      args.push_back(o);
    }
    args.insert(args.end(), command.begin(), command.end());
    return run_cli(args);
  }
};

const std::vector<std::vector<std::string>> kChain{
    {"synth"},
    {"derive-labels"},
    {"make-clips"},
    {"train-siamese"},
    {"pseudo-label"},
    {"train-mood", "--model", "resmood"},
    {"train-mood", "--model", "resmoodemo", "--delta", "pseudo"},
    {"train-mood", "--model", "resmoodemo", "--delta", "gt"},
    {"train-ts"},
    {"evaluate"},
};

std::string join(const std::vector<std::string>& parts) {
  std::string s;
  for (const auto& p : parts) s += (s.empty() ? "" : " ") + p;
  return s;
}

// Runs the chain; returns the failing command or an empty string.
std::string run_chain(const Runner& run) {
  for (const auto& command : kChain) {
    const int code = run(command);
    if (code != 0) return join(command) + " (exit " + std::to_string(code) + ")";
  }
  return {};
}

std::map<std::string, std::string> snapshot(const fs::path& root) {
  std::map<std::string, std::string> files;
  for (const auto* dir : {"reports", "stages", "labels", "clips"}) {
    if (!fs::exists(root / dir)) continue;
    for (const auto& entry : fs::recursive_directory_iterator(root / dir)) {
      if (!entry.is_regular_file()) continue;
      std::ifstream in(entry.path(), std::ios::binary);
      files[fs::relative(entry.path(), root).string()] = {std::istreambuf_iterator<char>(in), {}};
    }
  }
  return files;
}

struct DeskRun {
  Outcome outcome;
  bool completed = false;
};

DeskRun desk_run(const Runner& run) {
  fs::remove_all(run.workdir);
  const auto start = Clock::now();
  const auto failed = run_chain(run);
  const double secs = seconds_since(start);
  if (!failed.empty()) return {{false, "chain stopped at " + failed}, false};

  const auto clips = read_clip_manifest(run.workdir / "clips" / "manifest.jsonl");
  std::set<std::string> videos;
  for (const auto& c : clips) videos.insert(c.video_id);
  const auto siamese = read_json(run.workdir / "reports" / "siamese.json").at("heldout_accuracy").get<double>();
  const auto emo = read_json(run.workdir / "reports" / "train" / "resmoodemo-pseudo.json").at("train_f1").get<double>();
  const auto student = read_json(run.workdir / "reports" / "train" / "student.json").at("train_f1").get<double>();
  const bool ok = secs < 15 * 60 && videos.size() >= 20 && clips.size() >= 200 && siamese >= 0.95 && emo >= 0.95 &&
                  student >= 0.9;
  return {{ok, std::to_string(videos.size()) + " videos, " + std::to_string(clips.size()) + " clips, " +
                   fmt("%.0f", secs) + " s; siamese held-out acc " + fmt("%.4f", siamese) +
                   ", resmoodemo train F1 " + fmt("%.4f", emo) + ", student train F1 " + fmt("%.4f", student)},
          true};
}

Outcome determinism(const Runner& run) {
  const auto before = snapshot(run.workdir);
  const auto failed = run_chain(run);
  if (!failed.empty()) return {false, "rerun stopped at " + failed};
  const auto after = snapshot(run.workdir);
  std::vector<std::string> differing;
  for (const auto& [path, bytes] : before) {
    const auto it = after.find(path);
    if (it == after.end() || it->second != bytes) differing.push_back(path);
  }
  for (const auto& [path, bytes] : after) {
    if (!before.count(path)) differing.push_back(path);
  }
  if (!differing.empty()) return {false, std::to_string(differing.size()) + " files differ, first " + differing[0]};
  return {true, std::to_string(after.size()) + " report, label and stage files byte-identical after rerunning " +
                    std::to_string(kChain.size()) + " commands"};
}

Outcome trend(const fs::path& config, const fs::path& root) {
  const auto start = Clock::now();
  int wins = 0;
  std::string detail;
  for (int seed = 1; seed <= 5; ++seed) {
    const Runner run{config, root / ("seed" + std::to_string(seed)), {"seed=" + std::to_string(seed)}};
    fs::remove_all(run.workdir);
    for (const auto& command : std::vector<std::vector<std::string>>{
             {"synth"}, {"derive-labels"}, {"make-clips"}, {"train-mood", "--model", "resmood"},
             {"train-mood", "--model", "resmoodemo", "--delta", "gt"}}) {
      const int code = run(command);
      if (code != 0) return {false, "seed " + std::to_string(seed) + ": " + join(command) + " exited " +
                                        std::to_string(code)};
    }
    const auto base = read_json(run.workdir / "reports" / "metrics" / "resmood.json").at("f1").get<double>();
    const auto emo = read_json(run.workdir / "reports" / "metrics" / "resmoodemo-gt.json").at("f1").get<double>();
    if (emo >= base) ++wins;
    detail += fmt("%.3f", emo) + (emo >= base ? ">=" : "<") + fmt("%.3f", base) + " ";
  }
  return {wins >= 4, std::to_string(wins) + "/5 seeds with held-out F1 resmoodemo >= resmood: " + detail +
                         fmt("(%.0f s)", seconds_since(start))};
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Acceptance criteria"};
  std::string configs = MOODKIT_CONFIG_DIR;
  std::string workdir = (fs::temp_directory_path() / "moodkit_acceptance").string();
  std::vector<int> only;
  app.add_option("--configs", configs, "Directory holding desk.ini and trend.ini");
  app.add_option("--workdir", workdir, "Scratch directory");
  app.add_option("--only", only, "Criteria to run")->delimiter(',');
  CLI11_PARSE(app, argc, argv);

  torch::set_num_threads(1);
  log::set_threshold(log::Level::error);
  const auto wanted = [&](int n) { return only.empty() || std::find(only.begin(), only.end(), n) != only.end(); };

  int failures = 0;
  const auto report = [&](int n, const std::string& name, const Outcome& o) {
    std::printf("%s %d %s: %s\n", o.pass ? "PASS" : "FAIL", n, name.c_str(), o.detail.c_str());
    std::fflush(stdout);
    if (!o.pass) ++failures;
  };
  const auto guarded = [](const std::function<Outcome()>& fn) {
    try {
      return fn();
    } catch (const std::exception& e) {
      return Outcome{false, std::string("exception: ") + e.what()};
    }
  };

  if (wanted(1)) report(1, "loss oracles", guarded(loss_oracles));
  if (wanted(2)) report(2, "gradient checks", guarded(gradient_checks));
  if (wanted(3)) report(3, "label oracles", guarded(label_oracles));
  if (wanted(4)) report(4, "metric oracle", guarded(metric_oracle));

  const Runner desk{fs::path(configs) / "desk.ini", fs::path(workdir) / "desk", {}};
  bool desk_done = false;
  if (wanted(5) || wanted(7)) {
    const auto r = guarded([&] {
      auto d = desk_run(desk);
      desk_done = d.completed;
      return d.outcome;
    });
    if (wanted(5)) report(5, "end-to-end desk run", r);
  }
  if (wanted(6)) report(6, "trend check", guarded([&] { return trend(fs::path(configs) / "trend.ini", fs::path(workdir) / "trend"); }));
  if (wanted(7)) {
    report(7, "determinism", desk_done ? guarded([&] { return determinism(desk); })
                                       : Outcome{false, "desk run did not complete"});
  }
  return failures == 0 ? 0 : 1;
}
