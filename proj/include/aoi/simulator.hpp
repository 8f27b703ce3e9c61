#pragma once

// Event-driven simulation of the dual-server generate-at-will system.
//
// ZW: a finishing server is refilled at once; the monitor drops any packet
// that is not fresher than the last accepted one.
// F/P: every transmission start freezes generation for an Erlang-k time; at
// freeze end a fresh packet goes to an idle server (server 1 first) and a new
// freeze starts; a packet made obsolete by a delivery is preempted at once.
// PO: F/P without freezes (native mode, no large-lambda surrogate).

#include "aoi/aoi_metrics.hpp"
#include "aoi/model.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <future>
#include <limits>
#include <numeric>
#include <optional>
#include <random>
#include <stdexcept>
#include <vector>

namespace aoi {

struct SimConfig {
  ModelKey model;
  std::uint64_t horizon = 100000;          ///< successful receptions per replication
  std::optional<std::uint64_t> warmup;     ///< receptions discarded; default 1% of horizon
  std::uint64_t seed = 1;
  int replications = 1;
  bool parallel = true;

  [[nodiscard]] std::uint64_t effective_warmup() const { return warmup.value_or(horizon / 100); }

  void validate() const {
    (void)model.normalized();
    if (horizon < 1000) throw std::invalid_argument("horizon must be >= 1000 receptions");
    if (effective_warmup() >= horizon) throw std::invalid_argument("warmup must be smaller than horizon");
    if (replications < 1) throw std::invalid_argument("replications must be >= 1");
  }
};

/// One AoI cycle between consecutive successful receptions.
struct CycleRecord {
  double start_age;  ///< u: age right after the opening reception
  double length;     ///< L: time to the next successful reception
  double peak;       ///< age just before the closing reception
};

/// Time-average AoI cdf: fraction of time the sawtooth is <= x, exact for
/// piecewise-linear ages.
class EmpiricalAoiCdf {
 public:
  EmpiricalAoiCdf() = default;
  explicit EmpiricalAoiCdf(const std::vector<CycleRecord>& cycles) {
    starts_.reserve(cycles.size());
    ends_.reserve(cycles.size());
    for (const auto& c : cycles) {
      starts_.push_back(c.start_age);
      ends_.push_back(c.start_age + c.length);
      total_ += c.length;
    }
    std::sort(starts_.begin(), starts_.end());
    std::sort(ends_.begin(), ends_.end());
    start_prefix_ = prefix(starts_);
    end_prefix_ = prefix(ends_);
  }

  [[nodiscard]] double operator()(double x) const {
    if (starts_.empty() || total_ <= 0.0) return 0.0;
    // sum_c clamp(x - u_c, 0, L_c) = sum_{u<x}(x-u) - sum_{e<x}(x-e)
    const auto ns = static_cast<std::size_t>(std::lower_bound(starts_.begin(), starts_.end(), x) - starts_.begin());
    const auto ne = static_cast<std::size_t>(std::lower_bound(ends_.begin(), ends_.end(), x) - ends_.begin());
    const double a = static_cast<double>(ns) * x - start_prefix_[ns];
    const double b = static_cast<double>(ne) * x - end_prefix_[ne];
    return std::clamp((a - b) / total_, 0.0, 1.0);
  }

  /// Points where the cdf changes slope.
  [[nodiscard]] std::vector<double> breakpoints() const {
    std::vector<double> out(starts_);
    out.insert(out.end(), ends_.begin(), ends_.end());
    std::sort(out.begin(), out.end());
    return out;
  }
  [[nodiscard]] bool empty() const noexcept { return starts_.empty(); }

 private:
  static std::vector<double> prefix(const std::vector<double>& v) {
    std::vector<double> p(v.size() + 1, 0.0);
    for (std::size_t i = 0; i < v.size(); ++i) p[i + 1] = p[i] + v[i];
    return p;
  }
  std::vector<double> starts_, ends_, start_prefix_, end_prefix_;
  double total_ = 0.0;
};

/// Right-continuous step cdf of the peak samples.
class EmpiricalPaoiCdf {
 public:
  EmpiricalPaoiCdf() = default;
  explicit EmpiricalPaoiCdf(const std::vector<CycleRecord>& cycles) {
    samples_.reserve(cycles.size());
    for (const auto& c : cycles) samples_.push_back(c.peak);
    std::sort(samples_.begin(), samples_.end());
  }
  [[nodiscard]] double operator()(double x) const {
    if (samples_.empty()) return 0.0;
    const auto n = std::upper_bound(samples_.begin(), samples_.end(), x) - samples_.begin();
    return static_cast<double>(n) / static_cast<double>(samples_.size());
  }
  /// Left limit F(x-).
  [[nodiscard]] double left_limit(double x) const {
    if (samples_.empty()) return 0.0;
    const auto n = std::lower_bound(samples_.begin(), samples_.end(), x) - samples_.begin();
    return static_cast<double>(n) / static_cast<double>(samples_.size());
  }
  [[nodiscard]] const std::vector<double>& samples() const noexcept { return samples_; }

 private:
  std::vector<double> samples_;
};

struct ReplicationStats {
  double mean_aoi = 0.0;
  double mean_paoi = 0.0;
  std::uint64_t cycles = 0;
};

struct SimResult {
  SimConfig config;
  double mean_aoi = 0.0;
  double mean_aoi_se = std::numeric_limits<double>::quiet_NaN();  ///< across replications; NaN if only one
  double mean_paoi = 0.0;
  double mean_paoi_se = std::numeric_limits<double>::quiet_NaN();
  std::uint64_t cycle_count = 0;
  std::vector<ReplicationStats> per_replication;
  std::vector<CycleRecord> cycles;  ///< pooled in replication order

  std::uint64_t generated = 0;
  std::uint64_t discarded_at_monitor = 0;  ///< ZW only
  std::uint64_t stale_discards = 0;        ///< discards whose packet was older than the last accepted
  std::uint64_t preempted = 0;             ///< F/P and PO
  std::uint64_t order_violations = 0;     ///< accepted packets not newer than the previous acceptance

  /// F/P: entry state of each newly generated packet in the per-packet chain,
  /// indices 0..2 = (1,1), (10,1), (6,1).
  std::array<std::uint64_t, 3> entry_counts{};
  /// F/P: time spent in recurrent-chain classes 1..7 (index 0..6), phases merged.
  std::array<double, 7> occupancy_time{};

  EmpiricalAoiCdf aoi_cdf;
  EmpiricalPaoiCdf paoi_cdf;
};

namespace detail {

class SimRng {
 public:
  SimRng(std::uint64_t seed, std::uint64_t replication) {
    std::seed_seq seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32),
                      static_cast<std::uint32_t>(replication), static_cast<std::uint32_t>(replication >> 32)};
    engine_.seed(seq);
  }
  /// U in (0, 1]
  double uniform() { return 1.0 - static_cast<double>(engine_() >> 11) * 0x1.0p-53; }
  double exponential(double rate) { return -std::log(uniform()) / rate; }
  double erlang(double mean, int k) {
    const double rate = k / mean;
    double s = 0.0;
    for (int i = 0; i < k; ++i) s += exponential(rate);
    return s;
  }

 private:
  std::mt19937_64 engine_;
};

struct ReplicationOutput {
  ReplicationStats stats;
  std::vector<CycleRecord> cycles;
  std::uint64_t generated = 0, discarded = 0, stale = 0, preempted = 0, violations = 0;
  std::array<std::uint64_t, 3> entry{};
  std::array<double, 7> occupancy{};
};

class Replication {
 public:
  Replication(const SimConfig& cfg, std::uint64_t rep)
      : m_(cfg.model.normalized()), horizon_(cfg.horizon), warmup_(cfg.effective_warmup()), rng_(cfg.seed, rep) {
    rate_[0] = m_.mu1;
    rate_[1] = m_.mu2;
  }

  ReplicationOutput run() {
    out_.cycles.reserve(static_cast<std::size_t>(horizon_ - warmup_));
    if (m_.policy == Policy::kZw) {
      start_packet(0);
      start_packet(1);
    } else {
      try_generate();
    }
    while (receptions_ < horizon_) step();
    out_.stats.cycles = out_.cycles.size();
    double area = 0.0, len = 0.0, peak = 0.0;
    for (const auto& c : out_.cycles) {
      area += c.start_age * c.length + 0.5 * c.length * c.length;
      len += c.length;
      peak += c.peak;
    }
    out_.stats.mean_aoi = len > 0.0 ? area / len : 0.0;
    out_.stats.mean_paoi = out_.cycles.empty() ? 0.0 : peak / static_cast<double>(out_.cycles.size());
    return std::move(out_);
  }

 private:
  struct Packet {
    double gen_time;
    std::uint64_t seq;
  };
  struct Server {
    bool busy = false;
    Packet packet{};
    double done = 0.0;
    std::uint64_t order = 0;  // scheduling order, tie-break only
  };
  enum class Event { kCompletion0, kCompletion1, kFreezeEnd };

  // after the warmup-th reception; cycles closed from then on are recorded,
  // horizon - warmup of them
  bool measuring() const { return receptions_ >= warmup_ && receptions_ > 0; }

  void start_packet(int s) {
    Server& srv = server_[s];
    const Packet p{now_, next_seq_++};
    if (measuring()) {
      ++out_.generated;
      if (m_.policy == Policy::kFp) {
        const bool other_busy = server_[1 - s].busy;
        out_.entry[s == 1 ? 1 : (other_busy ? 2 : 0)] += 1;
      }
    }
    srv.busy = true;
    srv.packet = p;
    srv.done = now_ + rng_.exponential(rate_[s]);
    srv.order = next_order_++;
  }

  void try_generate() {
    if (frozen_) return;
    if (m_.policy == Policy::kPreemptOnly) {
      for (int s = 0; s < 2; ++s)
        if (!server_[s].busy) start_packet(s);
      return;
    }
    // F/P: one packet per freeze cycle
    const int s = !server_[0].busy ? 0 : (!server_[1].busy ? 1 : -1);
    if (s < 0) return;
    start_packet(s);
    frozen_ = true;
    freeze_end_ = now_ + rng_.erlang(1.0 / m_.lambda, m_.k);
    freeze_order_ = next_order_++;
  }

  Event next_event() const {
    // completion before freeze expiry on ties, then scheduling order
    std::optional<Event> best;
    double t = std::numeric_limits<double>::infinity();
    std::uint64_t order = 0;
    int prio = 0;
    auto consider = [&](Event e, double time, int p, std::uint64_t o) {
      if (!best || time < t || (time == t && (p < prio || (p == prio && o < order)))) {
        best = e;
        t = time;
        prio = p;
        order = o;
      }
    };
    if (server_[0].busy) consider(Event::kCompletion0, server_[0].done, 0, server_[0].order);
    if (server_[1].busy) consider(Event::kCompletion1, server_[1].done, 0, server_[1].order);
    if (frozen_) consider(Event::kFreezeEnd, freeze_end_, 1, freeze_order_);
    if (!best) throw std::logic_error("simulator: no pending event");
    return *best;
  }

  double event_time(Event e) const {
    switch (e) {
      case Event::kCompletion0: return server_[0].done;
      case Event::kCompletion1: return server_[1].done;
      case Event::kFreezeEnd: return freeze_end_;
    }
    return 0.0;
  }

  // recurrent-chain class 1..7 of the current F/P state (0 if transient)
  int occupancy_class() const {
    const bool b0 = server_[0].busy, b1 = server_[1].busy;
    if (frozen_) {
      if (!b0 && !b1) return 1;
      if (b0 && !b1) return 2;
      if (!b0 && b1) return 3;
      return server_[0].packet.seq < server_[1].packet.seq ? 4 : 5;
    }
    if (b0 && b1) return server_[0].packet.seq < server_[1].packet.seq ? 6 : 7;
    return 0;
  }

  void advance_to(double t) {
    if (measuring() && m_.policy == Policy::kFp) {
      const int c = occupancy_class();
      if (c > 0) out_.occupancy[static_cast<std::size_t>(c - 1)] += t - now_;
    }
    now_ = t;
  }

  void accept(const Packet& p) {
    if (have_last_ && !(p.seq > last_seq_ && p.gen_time >= last_gen_)) ++out_.violations;
    if (have_last_) {
      const double length = now_ - last_delivery_;
      const CycleRecord c{last_delivery_ - last_gen_, length, now_ - last_gen_};
      if (measuring()) out_.cycles.push_back(c);
    }
    have_last_ = true;
    last_seq_ = p.seq;
    last_gen_ = p.gen_time;
    last_delivery_ = now_;
    ++receptions_;
  }

  void step() {
    const Event e = next_event();
    advance_to(event_time(e));
    if (e == Event::kFreezeEnd) {
      frozen_ = false;
      try_generate();
      return;
    }
    const int s = e == Event::kCompletion0 ? 0 : 1;
    const Packet p = server_[s].packet;
    server_[s].busy = false;
    if (m_.policy == Policy::kZw) {
      if (!have_last_ || p.seq > last_seq_) {
        accept(p);
      } else {
        if (measuring()) {
          ++out_.discarded;
          if (p.gen_time <= last_gen_) ++out_.stale;
        }
      }
      start_packet(s);
      return;
    }
    // F/P and PO never deliver out of order: obsolete packets are gone already
    if (have_last_ && p.seq <= last_seq_) {
      ++out_.discarded;
    } else {
      accept(p);
    }
    Server& other = server_[1 - s];
    if (other.busy && other.packet.seq < p.seq) {
      other.busy = false;
      if (measuring()) ++out_.preempted;
    }
    try_generate();
  }

  ModelKey m_;
  std::uint64_t horizon_, warmup_;
  SimRng rng_;
  std::array<double, 2> rate_{};
  std::array<Server, 2> server_{};
  bool frozen_ = false;
  double freeze_end_ = 0.0;
  std::uint64_t freeze_order_ = 0;
  double now_ = 0.0;
  std::uint64_t next_seq_ = 0, next_order_ = 0;
  bool have_last_ = false;
  std::uint64_t last_seq_ = 0;
  double last_gen_ = 0.0, last_delivery_ = 0.0;
  std::uint64_t receptions_ = 0;
  ReplicationOutput out_;
};

}  // namespace detail

inline SimResult simulate(const SimConfig& cfg) {
  cfg.validate();
  SimResult r;
  r.config = cfg;
  r.config.model = cfg.model.normalized();
  r.config.warmup = cfg.effective_warmup();

  const auto reps = static_cast<std::size_t>(cfg.replications);
  std::vector<detail::ReplicationOutput> outs(reps);
  if (cfg.parallel && reps > 1) {
    std::vector<std::future<detail::ReplicationOutput>> jobs;
    for (std::size_t i = 0; i < reps; ++i)
      jobs.push_back(std::async(std::launch::async, [&cfg, i] { return detail::Replication(cfg, i).run(); }));
    for (std::size_t i = 0; i < reps; ++i) outs[i] = jobs[i].get();
  } else {
    for (std::size_t i = 0; i < reps; ++i) outs[i] = detail::Replication(cfg, i).run();
  }

  std::size_t total = 0;
  for (const auto& o : outs) total += o.cycles.size();
  r.cycles.reserve(total);
  for (auto& o : outs) {
    r.per_replication.push_back(o.stats);
    r.cycles.insert(r.cycles.end(), o.cycles.begin(), o.cycles.end());
    r.generated += o.generated;
    r.discarded_at_monitor += o.discarded;
    r.stale_discards += o.stale;
    r.preempted += o.preempted;
    r.order_violations += o.violations;
    for (std::size_t i = 0; i < 3; ++i) r.entry_counts[i] += o.entry[i];
    for (std::size_t i = 0; i < 7; ++i) r.occupancy_time[i] += o.occupancy[i];
  }
  r.cycle_count = r.cycles.size();

  double area = 0.0, len = 0.0, peak = 0.0;
  for (const auto& c : r.cycles) {
    area += c.start_age * c.length + 0.5 * c.length * c.length;
    len += c.length;
    peak += c.peak;
  }
  r.mean_aoi = area / len;
  r.mean_paoi = peak / static_cast<double>(r.cycle_count);

  if (reps >= 2) {
    auto se = [&](auto field) {
      double m = 0.0;
      for (const auto& s : r.per_replication) m += field(s);
      m /= static_cast<double>(reps);
      double v = 0.0;
      for (const auto& s : r.per_replication) v += (field(s) - m) * (field(s) - m);
      return std::sqrt(v / static_cast<double>(reps - 1) / static_cast<double>(reps));
    };
    r.mean_aoi_se = se([](const ReplicationStats& s) { return s.mean_aoi; });
    r.mean_paoi_se = se([](const ReplicationStats& s) { return s.mean_paoi; });
  }
  r.aoi_cdf = EmpiricalAoiCdf(r.cycles);
  r.paoi_cdf = EmpiricalPaoiCdf(r.cycles);
  return r;
}

/// sup |F_emp - F_table| over the table grid merged with the empirical
/// breakpoints (sample points and their left limits for PAoI).
inline double ks_distance(const EmpiricalPaoiCdf& emp, const DistributionTable& table) {
  double d = 0.0;
  for (double x : table.grid) d = std::max(d, std::abs(emp(x) - table.cdf_at(x)));
  for (double x : emp.samples()) {
    const double f = table.cdf_at(x);
    d = std::max({d, std::abs(emp(x) - f), std::abs(emp.left_limit(x) - f)});
  }
  return d;
}

inline double ks_distance(const EmpiricalAoiCdf& emp, const DistributionTable& table) {
  double d = 0.0;
  for (double x : table.grid) d = std::max(d, std::abs(emp(x) - table.cdf_at(x)));
  for (double x : emp.breakpoints()) d = std::max(d, std::abs(emp(x) - table.cdf_at(x)));
  return d;
}

/// sup-distance between two analytic tables on their merged grids.
inline double ks_distance(const DistributionTable& a, const DistributionTable& b) {
  double d = 0.0;
  for (double x : a.grid) d = std::max(d, std::abs(a.cdf_at(x) - b.cdf_at(x)));
  for (double x : b.grid) d = std::max(d, std::abs(a.cdf_at(x) - b.cdf_at(x)));
  return d;
}

struct KsReport {
  double aoi = 0.0;
  double paoi = 0.0;
};

/// Compares a simulation against the analytic law of the same system;
/// refuses to compare different systems.
inline KsReport empirical_vs_analytic(const SimResult& sim, const AnalyticResult& analytic) {
  if (!sim.config.model.same_system(analytic.model))
    throw std::invalid_argument("empirical_vs_analytic: simulation and analytic parameters differ");
  return {ks_distance(sim.aoi_cdf, analytic.summary.aoi_table), ks_distance(sim.paoi_cdf, analytic.summary.paoi_table)};
}

}  // namespace aoi
