// Copyright 2026 The skws Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//   http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#ifndef SKWS_RESOURCES_HPP_
#define SKWS_RESOURCES_HPP_

#include <map>
#include <string>
#include <vector>

#include "json.hpp"
#include "skws/arch.hpp"

namespace skws {

inline constexpr double kMiB = 1024.0 * 1024.0;
inline constexpr double kSecondsPerDay = 86400.0;
inline constexpr double kDaysPerMonth = 30.0;

/// Measured per-model constants of the target platform.
struct ArchPlatform {
  double p_label_active_avg_mw = 0.0;  // labeling power, no sleep
  double e_train_j = 0.0;              // one training run incl. external RAM
  double t_nn_ms = 0.0;                // inference time per window
  bool inferred = false;               // back-derived rather than quoted
};

struct PlatformConstants {
  std::map<std::string, ArchPlatform> per_arch;
  double p_mic_sleep_mw = 0.018;
  double p_mcu_sleep_mw = 0.045;
  double p_mic_active_mw = 0.67;
  double t_mfcc_ms = 2.5;
  double t_overhead_ms = 1.0;
  double battery_capacity_j = 12830.0;  // 0.66 mW for 7.5 thirty-day months
  int bytes_per_train_elem = 2;
  int train_trigger_samples = 400;

  static PlatformConstants Defaults();
  const ArchPlatform& For(const std::string& arch) const;
  void Validate() const;
};

struct MemoryReport {
  double weights_grads_mib = 0.0;
  double data_mib = 0.0;
  double activations_mib = 0.0;
};

/// Weights and gradients at bytes_per_elem each, stored MFCC maps (470
/// elements), and the activation tape of one mini-batch.
MemoryReport TrainingMemory(const ArchDescriptor& arch, int n_stored_maps, int batch_size,
                            int bytes_per_elem = 2);
double WeightsGradsMib(std::size_t param_count, int bytes_per_elem = 2);
double StoredMapsMib(int n_maps, int bytes_per_elem = 2);
/// Raw 1 s of 16-bit audio vs one f16 MFCC map.
double RawToMfccStorageRatio();

/// Per-sample interval at which daily training energy is one tenth of daily
/// labeling energy.
double CrossoverInterval10x(double e_train_j, double p_label_mw, int trigger = 400);
double TrainingEnergyPerDayJ(double e_train_j, double interval_s, int trigger = 400);
double LabelingEnergyPerDayJ(double p_label_mw);

/// activity * p_active + (1 - activity) * (p_mic_sleep + p_mcu_sleep)
double AveragePowerWithSleep(double p_active_mw, double activity_fraction,
                             double p_mic_sleep_mw = 0.018, double p_mcu_sleep_mw = 0.045);
double BatteryLifetimeDays(double avg_power_mw, double capacity_j);

/// Parametric latency hook; needs user-supplied throughput constants.
double TrainingLatencySeconds(double total_training_macs, double macs_per_cycle, double freq_hz);

struct DutyReport {
  double t_active_ms = 0.0;
  double stride_ms = 0.0;
  double duty = 0.0;
  double p_label_mw = 0.0;
};

/// Table-III-shaped report for one architecture.
nlohmann::json EstimateReport(const ArchDescriptor& arch, const PlatformConstants& platform,
                              int n_stored_maps = 400, int batch_size = 73,
                              double activity_fraction = 0.1);
/// Fig.-8-shaped rows: interval_s, per-arch training J/day, labeling J/day.
std::string EnergyTradeoffCsv(const std::vector<std::string>& archs,
                              const PlatformConstants& platform,
                              const std::vector<double>& intervals_s);

}  // namespace skws

#endif  // SKWS_RESOURCES_HPP_
