// Per-connection online-learning rate controller.
//
// Time is partitioned into monitor intervals (MIs). Each MI transmits at one
// constant rate; acknowledgment feedback becomes IntervalStats; paired +/-eps
// probe intervals give a central-difference utility gradient that moves the
// rate. Interval statistics may resolve after later intervals have already
// started, so the controller tags every interval with its probing role when
// it begins and consumes results strictly in interval order.
#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <utility>
#include <vector>

#include "gencc/dsl.hpp"

namespace gencc::cc {

struct ControllerConfig {
  double epsilon = 0.05;          // probe perturbation fraction
  double step_gain = 1.0;         // Mbps^2 per utility unit
  double step_cap = 0.25;         // max relative rate change per update
  double rate_min = 0.05;         // Mbps
  double rate_max = 100.0;        // Mbps; scenario runners pin 2x capacity
  double mi_duration_factor = 1.0;  // MI length as multiple of smoothed RTT
  double mi_floor_ms = 10.0;
  double initial_rate = 0.0;      // Mbps; <= 0 means start at the flow's a

  void check() const;  // throws std::invalid_argument naming the field
};

enum class Phase : std::uint8_t { ProbeUp, ProbeDown, Moving };

struct FlowState {
  double rate = 0.0;  // r_t, Mbps
  Phase phase = Phase::ProbeUp;
  double smoothed_rtt_ms = 0.0;  // 0 until the first sample
  std::uint64_t mi_counter = 0;
  std::optional<double> probe_up_utility;
  std::optional<double> probe_down_utility;
};

struct PacketRecord {
  double send_time_ms = 0.0;
  bool acked = false;
  bool lost = false;
  double rtt_ms = 0.0;  // meaningful when acked
  std::uint32_t size_bytes = 1250;
};

struct IntervalStats {
  double duration_ms = 0.0;
  std::uint64_t packets_sent = 0;
  std::uint64_t packets_acked = 0;
  std::uint64_t packets_lost = 0;  // known lost; sent-acked-lost is carryover
  double loss_rate = 0.0;
  std::vector<std::pair<double, double>> rtt_samples;  // (send ms, rtt ms)
  double rtt_grad = 0.0;  // least-squares slope of rtt over send time
  double rtt_dev = 0.0;   // population stddev of rtt samples
  double achieved_rate_mbps = 0.0;
  double commanded_rate_mbps = 0.0;
};

// Rate commanded for the next interval given the probing phase, clamped to
// [rate_min, rate_max].
double interval_rate(const FlowState& state, const ControllerConfig& cfg);

// Folds one interval's acknowledgment trace into statistics. An empty trace
// gives all-zero stats. commanded_rate_mbps is left for the caller to fill.
IntervalStats compute_stats(std::span<const PacketRecord> trace,
                            double duration_ms);

// Evaluates the utility at the interval's commanded rate. Faults propagate.
dsl::EvalResult utility_of_interval(const dsl::Expr& utility,
                                    const IntervalStats& stats, double a,
                                    double b);

// Central-difference gradient step. Both utilities must have been measured
// against state.rate as the base. Clamps the relative change to step_cap and
// the result to [rate_min, rate_max]; restarts probing.
FlowState update_rate(const FlowState& state, double u_plus, double u_minus,
                      const ControllerConfig& cfg);

// The per-flow driver: owns the FlowState and the utility, tags intervals as
// they begin, and applies gradient updates as their stats resolve.
class RateController {
 public:
  struct MiPlan {
    std::uint64_t index = 0;
    Phase role = Phase::Moving;
    double base_rate = 0.0;
    double commanded_rate = 0.0;
  };

  RateController(ControllerConfig cfg, dsl::ExprPtr utility, double a,
                 double b);

  // MI length from the current smoothed RTT, never below the floor.
  double mi_duration_ms() const;

  // Starts the next interval: assigns its probing role and commanded rate.
  MiPlan begin_interval();

  // Feeds back one completed interval, in begin order. Returns the utility
  // value when it evaluated cleanly.
  std::optional<double> complete_interval(const MiPlan& plan,
                                          const IntervalStats& stats);

  void observe_rtt(double rtt_ms);

  // A faulting utility marks the flow failed; the rate freezes thereafter.
  bool faulted() const { return faulted_; }
  const FlowState& state() const { return state_; }
  const ControllerConfig& config() const { return cfg_; }

 private:
  ControllerConfig cfg_;
  dsl::ExprPtr utility_;
  double req_min_;
  double req_max_;
  FlowState state_;
  bool faulted_ = false;
};

}  // namespace gencc::cc
