// Acceptance suite. Prints one PASS/FAIL line per criterion and exits non-zero
// if any criterion fails.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <functional>
#include <numbers>
#include <random>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "fixtures.hpp"
#include "oracles.hpp"
#include "termweight/errors.hpp"
#include "termweight/experiment.hpp"
#include "termweight/io.hpp"
#include "termweight/parallel.hpp"

namespace tw = termweight;

namespace {

struct Outcome {
  bool pass = true;
  std::string detail;
  std::string fingerprint;  // bytes compared across thread counts
};

double seconds_since(std::chrono::steady_clock::time_point start) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
}

std::string fmt(const char* f, double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, f, v);
  return buf;
}

std::vector<std::uint32_t> random_positions(std::mt19937_64& rng, std::uint32_t length, std::size_t max_count) {
  std::set<std::uint32_t> picked;
  const std::size_t n = 1 + rng() % std::min<std::size_t>(max_count, length);
  while (picked.size() < n) picked.insert(static_cast<std::uint32_t>(rng() % length));
  return {picked.begin(), picked.end()};
}

// --- 1 -----------------------------------------------------------------------
Outcome transport_oracle() {
  std::mt19937_64 rng(1001);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  double worst_gap = 0.0;
  std::size_t beaten = 0;
  for (int trial = 0; trial < 500; ++trial) {
    const std::uint32_t length = 1 + rng() % 50;
    const std::size_t d = 1 + rng() % 8;
    const tw::PositionConfig config{d, true};
    const auto pa = random_positions(rng, length, 10);
    const auto pb = random_positions(rng, length, 10);
    const auto a = tw::quantize_positions(pa, length, config);
    const auto b = tw::quantize_positions(pb, length, config);
    const double w2 = tw::w2_distance(a, b);
    const double lp = oracle::w2_squared(oracle::uniform_atoms(a.values()), oracle::uniform_atoms(b.values()));
    worst_gap = std::max(worst_gap, std::abs(w2 * w2 - lp));

    std::vector<double> source;
    for (auto p : pa) source.push_back(tw::position_value(p, length, true));
    const auto empirical = oracle::uniform_atoms(source);
    const double best = oracle::w2_squared(empirical, oracle::uniform_atoms(a.values()));
    for (int c = 0; c < 1000; ++c) {
      std::vector<double> candidate(d);
      for (auto& v : candidate) v = unit(rng);
      std::sort(candidate.begin(), candidate.end());
      if (oracle::w2_squared(empirical, oracle::uniform_atoms(candidate)) < best - 1e-12) ++beaten;
    }
  }
  Outcome o;
  o.pass = worst_gap <= 1e-12 && beaten == 0;
  o.detail = "max |W2^2 - oracle| = " + fmt("%.3g", worst_gap) + ", candidates beating the quantizer: " +
             std::to_string(beaten) + "/500000";
  return o;
}

// --- 2 -----------------------------------------------------------------------
Outcome quantizer_hand_cases() {
  bool ok = true;
  for (std::size_t d : {1u, 2u, 5u, 100u}) {
    const std::vector<double> at{0.25};
    const auto q = tw::quantize_values(at, d, true);
    for (double v : q.values()) ok = ok && v == 0.25;
  }
  const std::vector<double> ends{0.0, 1.0};
  ok = ok && tw::quantize_values(ends, 4, true).values().size() == 4;
  const auto q = tw::quantize_values(ends, 4, true);
  ok = ok && q[0] == 0.0 && q[1] == 0.0 && q[2] == 1.0 && q[3] == 1.0;
  const std::vector<double> pair{0.1, 0.9};
  const auto id = tw::quantize_values(pair, 2, true);
  ok = ok && id[0] == 0.1 && id[1] == 0.9;
  // A single token in a one-token document sits at the center of the axis.
  const std::vector<std::uint32_t> one{0};
  const auto center = tw::quantize_positions(one, 1, tw::PositionConfig{7, true});
  for (double v : center.values()) ok = ok && v == 0.5;
  return Outcome{ok, "point mass, {0,1}->[0,0,1,1], identity at n=D", ""};
}

// --- 3 -----------------------------------------------------------------------
Outcome kmeans_optimum() {
  std::mt19937_64 rng(3003);
  std::size_t matched = 0;
  double worst = 0.0;
  std::string blob;
  try {
    for (int trial = 0; trial < 100; ++trial) {
      const std::size_t n = 2 + rng() % 7;
      const std::size_t k = 1 + rng() % std::min<std::size_t>(3, n);
      const std::size_t d = 1 + rng() % 6;
      std::vector<tw::QuantileVector> points;
      std::vector<std::vector<double>> raw;
      for (std::size_t i = 0; i < n; ++i) {
        const std::uint32_t length = 1 + rng() % 30;
        points.push_back(tw::quantize_positions(random_positions(rng, length, 6), length, tw::PositionConfig{d, true}));
        raw.emplace_back(points.back().values().begin(), points.back().values().end());
      }
      const auto model = tw::fit_kmeans(points, tw::KMeansConfig{.k = k, .rel_tol = 0.0, .n_init = 20, .seed = rng()});
      for (std::size_t i = 1; i < model.inertia_history.size(); ++i)
        if (model.inertia_history[i] > model.inertia_history[i - 1] + 1e-9 * std::max(1.0, model.inertia_history[i - 1]))
          return Outcome{false, "inertia increased in trial " + std::to_string(trial), ""};
      const double gap = std::abs(model.inertia - oracle::best_partition_inertia(raw, k));
      worst = std::max(worst, gap);
      if (gap <= 1e-9) ++matched;
      blob += tw::serialize_cluster_model(model);
    }
  } catch (const tw::NumericError& e) {
    return Outcome{false, std::string("in-loop monotonicity check fired: ") + e.what(), ""};
  }
  return Outcome{matched == 100,
                 std::to_string(matched) + "/100 instances at the exhaustive optimum (max gap " + fmt("%.3g", worst) + ")",
                 blob};
}

// --- 4 -----------------------------------------------------------------------
Outcome bm25_values() {
  const tw::Bm25Params p;
  const double absent = tw::bm25_weight(0, 10, 50, 50, 100, p);
  const double zero_idf = tw::bm25_weight(1, 1, 7, 7, 2, p);
  const double hand = (2.0 * (1.2 + 1.0) / (2.0 + 1.2)) * std::log((100.0 - 10.0 + 0.5) / (10.0 + 0.5));
  const double value = tw::bm25_weight(2, 10, 50, 50, 100, p);
  bool ok = std::abs(absent) <= 1e-5 && std::abs(zero_idf) <= 1e-5 && std::abs(value - hand) <= 1e-5;

  std::size_t violations = 0;
  const double n = 1000;
  for (int i = 0; i < 100; ++i) {
    const double df = 1 + 4 * i;  // keeps idf positive
    const double len = 20 + 3 * i;
    for (double tf = 1; tf < 40; ++tf)
      if (!(tw::bm25_weight(tf, df, len, 150, n, p) < tw::bm25_weight(tf + 1, df, len, 150, n, p))) ++violations;
    const double tf = 1 + i % 10;
    for (double d = 1; d < n - 1; ++d)
      if (!(tw::bm25_weight(tf, d, len, 150, n, p) > tw::bm25_weight(tf, d + 1, len, 150, n, p))) ++violations;
  }
  ok = ok && violations == 0;
  return Outcome{ok,
                 "w(0)=" + fmt("%g", absent) + ", w(idf=0)=" + fmt("%.2g", zero_idf) + ", w(tf=2,N=100,df=10)=" +
                     fmt("%.6f", value) + " vs hand " + fmt("%.6f", hand) + ", monotonicity violations " +
                     std::to_string(violations),
                 ""};
}

// --- 5 -----------------------------------------------------------------------
Outcome gradient_fidelity() {
  const auto mlp_world = tw::testing::World::make(tw::testing::small_spec(tw::SyntheticPattern::Positional, 55), 10, 20);
  const auto bm25_world = tw::testing::World::make(tw::testing::small_spec(tw::SyntheticPattern::Frequency, 56), 3, 8);
  std::mt19937_64 rng(5005);
  std::uniform_real_distribution<double> kappa(-2.0, 2.0);
  std::uniform_real_distribution<double> beta(-3.0, 3.0);
  std::string blob;
  double worst_mlp = 0.0;
  double worst_bm25 = 0.0;

  auto check = [&](const tw::testing::World& w, const tw::RankingModel& model, std::uint64_t seed) {
    const auto triples = w.set.sample(200, seed);
    const auto ctx = w.context();
    const auto lg = tw::ranknet_gradient(ctx, model, w.set, triples);
    auto loss = [&](std::span<const double> theta) {
      auto m = model;
      m.set_parameters(theta);
      return tw::ranknet_loss(ctx, m, w.set, triples);
    };
    const auto fd = oracle::central_differences(loss, model.parameters(), 1e-5);
    blob.append(reinterpret_cast<const char*>(lg.gradient.data()), lg.gradient.size() * sizeof(double));
    return oracle::max_relative_error(lg.gradient, fd, 1e-6);
  };

  for (std::uint64_t i = 0; i < 20; ++i) {
    worst_mlp = std::max(worst_mlp, check(*mlp_world, tw::RankingModel::mlp(10, 50, rng()), i));
    auto model = tw::RankingModel::learned_bm25();
    const std::vector<double> theta{kappa(rng), beta(rng)};
    model.set_parameters(theta);
    worst_bm25 = std::max(worst_bm25, check(*bm25_world, model, i));
  }
  return Outcome{worst_mlp <= 1e-4 && worst_bm25 <= 1e-4,
                 "max relative error: mlp " + fmt("%.3g", worst_mlp) + ", learned bm25 " + fmt("%.3g", worst_bm25) +
                     " (20 points each)",
                 blob};
}

// --- 6 -----------------------------------------------------------------------
Outcome loss_sanity() {
  const auto w = tw::testing::World::make(tw::testing::small_spec(tw::SyntheticPattern::Positional, 66), 3, 8);
  const auto ctx = w->context();
  const auto triples = w->set.sample(2000, 6);
  const double at_zero = tw::ranknet_loss(ctx, tw::RankingModel::mlp(tw::MlpParams::zeros(3, 50)), w->set, triples);
  const bool zero_ok = std::abs(at_zero - std::numbers::ln2) <= 1e-12 &&
                       std::abs(tw::ranknet_pair_loss(0.0) - std::numbers::ln2) <= 1e-12;

  std::size_t increases = 0;
  for (auto model : {tw::RankingModel::mlp(3, 50, 7), tw::RankingModel::learned_bm25()}) {
    auto params = model.parameters();
    tw::AdamState state(params.size());
    double previous = INFINITY;
    for (int step = 0; step < 50; ++step) {
      model.set_parameters(params);
      const auto lg = tw::ranknet_gradient(ctx, model, w->set, triples);
      if (lg.loss > previous) ++increases;
      previous = lg.loss;
      tw::adam_step(params, lg.gradient, state, tw::AdamConfig{.learning_rate = 1e-4});
    }
  }
  return Outcome{zero_ok && increases == 0,
                 "loss at delta=0 minus ln2 = " + fmt("%.3g", at_zero - std::numbers::ln2) +
                     ", loss increases over 50 full-batch steps: " + std::to_string(increases),
                 ""};
}

// --- 7 -----------------------------------------------------------------------
struct SeedRun {
  double bm25_map = 0.0;
  double mlp_map = 0.0;
};

tw::SyntheticSpec default_spec(std::uint64_t seed, tw::SyntheticPattern pattern = tw::SyntheticPattern::Positional) {
  tw::SyntheticSpec spec;
  spec.pattern = pattern;
  spec.seed = seed;
  return spec;
}

Outcome separation() {
  std::vector<SeedRun> runs;
  std::string blob;
  for (std::uint64_t s = 0; s < 5; ++s) {
    const auto train = tw::Collection::from_bundle(tw::generate_synthetic(default_spec(tw::derive_seed(700, s))));
    const auto test = tw::Collection::from_bundle(tw::generate_synthetic(default_spec(tw::derive_seed(701, s))));

    tw::ExperimentSettings settings;
    settings.kmeans.seed = tw::derive_seed(710, s);
    settings.model.init_seed = tw::derive_seed(720, s);
    settings.train.seed = tw::derive_seed(730, s);
    const auto mlp = tw::cross_collection_experiment(train, test, settings);
    settings.model.variant = tw::ModelVariant::Bm25;
    const auto bm25 = tw::cross_collection_experiment(train, test, settings);
    runs.push_back({bm25.eval.map, mlp.eval.map});
    blob += mlp.log.to_jsonl() + tw::serialize_checkpoint(mlp.model) + tw::format_run(mlp.run) +
            tw::serialize_cluster_model(*mlp.clusters) + tw::format_run(bm25.run);
  }
  std::size_t bm25_in_band = 0;
  std::size_t mlp_good = 0;
  std::string maps;
  for (const auto& r : runs) {
    bm25_in_band += (r.bm25_map >= 0.35 && r.bm25_map <= 0.65) ? 1 : 0;
    mlp_good += r.mlp_map >= 0.90 ? 1 : 0;
    maps += " " + fmt("%.3f", r.bm25_map) + "/" + fmt("%.3f", r.mlp_map);
  }
  return Outcome{bm25_in_band == 5 && mlp_good >= 4,
                 "bm25 in [0.35,0.65] " + std::to_string(bm25_in_band) + "/5, mlp >= 0.90 " + std::to_string(mlp_good) +
                     "/5; bm25/mlp MAP per seed:" + maps,
                 blob};
}

// --- 8 -----------------------------------------------------------------------
Outcome learned_bm25() {
  std::size_t ok = 0;
  std::string detail;
  for (std::uint64_t s = 0; s < 5; ++s) {
    const auto pattern = tw::SyntheticPattern::Frequency;
    const auto train = tw::Collection::from_bundle(tw::generate_synthetic(default_spec(tw::derive_seed(800, s), pattern)));
    const auto test = tw::Collection::from_bundle(tw::generate_synthetic(default_spec(tw::derive_seed(801, s), pattern)));
    tw::ExperimentSettings settings;
    settings.model.variant = tw::ModelVariant::LearnedBm25;
    settings.train.seed = tw::derive_seed(830, s);
    const auto learned = tw::cross_collection_experiment(train, test, settings);
    settings.model.variant = tw::ModelVariant::Bm25;
    const auto fixed = tw::cross_collection_experiment(train, test, settings);
    const bool pass = learned.final_loss < learned.initial_loss && learned.eval.map >= fixed.eval.map - 0.01;
    ok += pass ? 1 : 0;
    const auto p = learned.model.bm25_params();
    detail += " [loss " + fmt("%.4f", learned.initial_loss) + "->" + fmt("%.4f", learned.final_loss) + ", MAP " +
              fmt("%.3f", learned.eval.map) + " vs " + fmt("%.3f", fixed.eval.map) + ", k1=" + fmt("%.2f", p.k1) +
              " b=" + fmt("%.2f", p.b) + "]";
  }
  return Outcome{ok == 5, std::to_string(ok) + "/5 seeds:" + detail, ""};
}

// --- 10 ----------------------------------------------------------------------
Outcome evaluation_oracle() {
  std::mt19937_64 rng(10010);
  std::size_t mismatches = 0;
  for (int trial = 0; trial < 1000; ++trial) {
    const std::size_t pool = 1 + rng() % 15;
    std::vector<std::string> docs;
    for (std::size_t i = 0; i < pool; ++i) docs.push_back("d" + std::to_string(i));
    std::shuffle(docs.begin(), docs.end(), rng);
    std::unordered_set<std::string> relevant;
    for (const auto& d : docs)
      if (rng() % 3 == 0) relevant.insert(d);
    if (relevant.empty()) relevant.insert(docs[rng() % pool]);
    const std::vector<std::string> ranking(docs.begin(), docs.begin() + static_cast<std::ptrdiff_t>(rng() % (pool + 1)));
    if (tw::average_precision(ranking, relevant) != oracle::average_precision(ranking, relevant)) ++mismatches;
  }

  std::size_t round_trip_failures = 0;
  std::uniform_real_distribution<double> u(-100.0, 100.0);
  for (int trial = 0; trial < 200; ++trial) {
    std::vector<tw::RunEntry> run;
    for (int q = 0; q < 4; ++q) {
      std::vector<double> scores(1 + rng() % 8);
      for (auto& s : scores) s = std::stod(fmt("%.6g", u(rng)));
      std::sort(scores.rbegin(), scores.rend());
      for (std::size_t i = 0; i < scores.size(); ++i)
        run.push_back({std::to_string(50 + q), "DOC-" + std::to_string(rng() % 10000), i + 1, scores[i], "run0"});
    }
    const auto text = tw::format_run(run);
    if (tw::parse_run(text) != run || tw::format_run(tw::parse_run(text)) != text) ++round_trip_failures;
  }
  return Outcome{mismatches == 0 && round_trip_failures == 0,
                 "AP mismatches " + std::to_string(mismatches) + "/1000, run round-trip failures " +
                     std::to_string(round_trip_failures) + "/200",
                 ""};
}

struct Criterion {
  int id;
  const char* name;
  double time_limit;  // seconds, 0 = none stated
  std::function<Outcome()> run;
};

}  // namespace

int main() {
  const std::vector<Criterion> criteria{
      {1, "transport oracle equivalence", 30, transport_oracle},
      {2, "quantizer hand cases", 0, quantizer_hand_cases},
      {3, "k-means exhaustive optimum", 60, kmeans_optimum},
      {4, "bm25 correctness", 0, bm25_values},
      {5, "gradient fidelity", 60, gradient_fidelity},
      {6, "loss sanity", 0, loss_sanity},
      {7, "synthetic separation", 600, separation},
      {8, "learned bm25 harness", 0, learned_bm25},
      {10, "evaluation oracle", 0, evaluation_oracle},
  };

  constexpr std::size_t kFirstThreads = 1;
  constexpr std::size_t kSecondThreads = 3;
  std::map<int, std::string> fingerprints;
  std::map<int, bool> results;
  auto report = [&](int id, const char* name, bool pass, const std::string& detail, double secs) {
    results[id] = pass;
    std::printf("%s C%d %s: %s (%.1f s)\n", pass ? "PASS" : "FAIL", id, name, detail.c_str(), secs);
    std::fflush(stdout);
  };

  tw::set_thread_count(kFirstThreads);
  for (const auto& c : criteria) {
    const auto start = std::chrono::steady_clock::now();
    Outcome o;
    try {
      o = c.run();
    } catch (const std::exception& e) {
      o = Outcome{false, std::string("exception: ") + e.what(), ""};
    }
    const double secs = seconds_since(start);
    if (c.time_limit > 0 && secs > c.time_limit) {
      o.pass = false;
      o.detail += "; over the " + fmt("%.0f", c.time_limit) + " s budget";
    }
    fingerprints[c.id] = o.fingerprint;
    report(c.id, c.name, o.pass, o.detail, secs);
  }

  // Repeat the seeded criteria at another thread count and compare bytes.
  {
    const auto start = std::chrono::steady_clock::now();
    tw::set_thread_count(kSecondThreads);
    std::string detail;
    bool pass = true;
    for (const auto& c : criteria) {
      if (c.id != 3 && c.id != 5 && c.id != 7) continue;
      std::string again;
      try {
        again = c.run().fingerprint;
      } catch (const std::exception& e) {
        again = std::string("exception: ") + e.what();
      }
      const bool same = !again.empty() && again == fingerprints[c.id];
      pass = pass && same;
      detail += "C" + std::to_string(c.id) + " " + (same ? "identical" : "DIFFERENT") + " (" +
                tw::hex64(tw::fnv1a64(again)) + ", " + std::to_string(again.size()) + " bytes); ";
    }
    detail += "threads " + std::to_string(kFirstThreads) + " vs " + std::to_string(kSecondThreads);
    report(9, "determinism across thread counts", pass, detail, seconds_since(start));
  }

  std::size_t passed = 0;
  for (const auto& [id, pass] : results) passed += pass ? 1 : 0;
  std::printf("%zu/%zu criteria passed\n", passed, results.size());
  return passed == results.size() ? 0 : 1;
}
