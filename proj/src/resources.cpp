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

#include "skws/resources.hpp"

#include <sstream>

#include "skws/common.hpp"

namespace skws {

PlatformConstants PlatformConstants::Defaults() {
  PlatformConstants p;
  // Active inference times are back-derived from the 4% (DS-CNN-S) and 12%
  // (ResNet15) duty cycles at a 125 ms stride.
  p.per_arch["dscnn_s"] = {6.1, 1.5, 1.5, false};
  p.per_arch["dscnn_m"] = {6.25, 4.7, 3.0, true};
  p.per_arch["dscnn_l"] = {6.71, 11.7, 5.5, true};
  p.per_arch["resnet15"] = {8.2, 86.8, 11.5, false};
  return p;
}

const ArchPlatform& PlatformConstants::For(const std::string& arch) const {
  const auto it = per_arch.find(arch);
  if (it == per_arch.end()) {
    throw Error(ErrorCode::kInvalidArgument, "no platform constants for arch '" + arch + "'");
  }
  return it->second;
}

void PlatformConstants::Validate() const {
  auto positive = [](double v, const char* what) {
    if (!(v > 0.0)) throw Error(ErrorCode::kInvalidArgument, std::string(what) + " must be > 0");
  };
  positive(p_mic_sleep_mw, "p_mic_sleep_mw");
  positive(p_mcu_sleep_mw, "p_mcu_sleep_mw");
  positive(p_mic_active_mw, "p_mic_active_mw");
  positive(battery_capacity_j, "battery_capacity_j");
  positive(bytes_per_train_elem, "bytes_per_train_elem");
  positive(train_trigger_samples, "train_trigger_samples");
  for (const auto& [name, a] : per_arch) {
    positive(a.p_label_active_avg_mw, "p_label_active_avg_mw");
    positive(a.e_train_j, "e_train_j");
  }
}

double WeightsGradsMib(std::size_t param_count, int bytes_per_elem) {
  return static_cast<double>(param_count) * 2.0 * bytes_per_elem / kMiB;
}

double StoredMapsMib(int n_maps, int bytes_per_elem) {
  return static_cast<double>(n_maps) * 470.0 * bytes_per_elem / kMiB;
}

double RawToMfccStorageRatio() {
  return (16000.0 * 2.0) / (470.0 * 2.0);
}

MemoryReport TrainingMemory(const ArchDescriptor& arch, int n_stored_maps, int batch_size,
                            int bytes_per_elem) {
  MemoryReport r;
  r.weights_grads_mib = WeightsGradsMib(arch.param_count, bytes_per_elem);
  r.data_mib = StoredMapsMib(n_stored_maps, bytes_per_elem);
  r.activations_mib = static_cast<double>(arch.activation_elems_per_sample()) * batch_size *
                      bytes_per_elem / kMiB;
  return r;
}

double CrossoverInterval10x(double e_train_j, double p_label_mw, int trigger) {
  if (e_train_j < 0.0 || !(p_label_mw > 0.0) || trigger <= 0) {
    throw Error(ErrorCode::kInvalidArgument, "crossover needs e >= 0, p > 0, trigger > 0");
  }
  return 10.0 * e_train_j / (trigger * p_label_mw * 1e-3);
}

double TrainingEnergyPerDayJ(double e_train_j, double interval_s, int trigger) {
  return kSecondsPerDay / interval_s / trigger * e_train_j;
}

double LabelingEnergyPerDayJ(double p_label_mw) { return p_label_mw * 1e-3 * kSecondsPerDay; }

double AveragePowerWithSleep(double p_active_mw, double activity_fraction,
                             double p_mic_sleep_mw, double p_mcu_sleep_mw) {
  if (activity_fraction < 0.0 || activity_fraction > 1.0) {
    throw Error(ErrorCode::kInvalidArgument, "activity fraction outside [0,1]");
  }
  return activity_fraction * p_active_mw +
         (1.0 - activity_fraction) * (p_mic_sleep_mw + p_mcu_sleep_mw);
}

double BatteryLifetimeDays(double avg_power_mw, double capacity_j) {
  if (!(avg_power_mw > 0.0)) throw Error(ErrorCode::kInvalidArgument, "power must be > 0");
  return capacity_j / (avg_power_mw * 1e-3 * kSecondsPerDay);
}

double TrainingLatencySeconds(double total_training_macs, double macs_per_cycle, double freq_hz) {
  if (!(macs_per_cycle > 0.0) || !(freq_hz > 0.0)) {
    throw Error(ErrorCode::kInvalidArgument, "throughput constants must be > 0");
  }
  return total_training_macs / (macs_per_cycle * freq_hz);
}

nlohmann::json EstimateReport(const ArchDescriptor& arch, const PlatformConstants& platform,
                              int n_stored_maps, int batch_size, double activity_fraction) {
  const MemoryReport mem =
      TrainingMemory(arch, n_stored_maps, batch_size, platform.bytes_per_train_elem);
  nlohmann::json j = {{"arch", arch.name},
                      {"param_count", arch.param_count},
                      {"mac_count", arch.mac_count},
                      {"embedding_dim", arch.embedding_dim},
                      {"mem_weights_grads_mib", mem.weights_grads_mib},
                      {"mem_data_mib", mem.data_mib},
                      {"mem_activations_mib", mem.activations_mib},
                      {"stored_maps", n_stored_maps},
                      {"batch_size", batch_size},
                      {"raw_to_mfcc_storage_ratio", RawToMfccStorageRatio()}};
  const auto it = platform.per_arch.find(arch.name);
  if (it != platform.per_arch.end()) {
    const ArchPlatform& a = it->second;
    const double p_sleep = AveragePowerWithSleep(a.p_label_active_avg_mw, activity_fraction,
                                                 platform.p_mic_sleep_mw, platform.p_mcu_sleep_mw);
    const double days = BatteryLifetimeDays(p_sleep, platform.battery_capacity_j);
    j["e_train_j"] = a.e_train_j;
    j["p_label_mw"] = a.p_label_active_avg_mw;
    j["constants_inferred"] = a.inferred;
    j["crossover_interval_10x_s"] =
        CrossoverInterval10x(a.e_train_j, a.p_label_active_avg_mw, platform.train_trigger_samples);
    j["labeling_energy_per_day_j"] = LabelingEnergyPerDayJ(a.p_label_active_avg_mw);
    j["avg_power_with_sleep_mw"] = p_sleep;
    j["activity_fraction"] = activity_fraction;
    j["battery_lifetime_days"] = days;
    j["battery_lifetime_months"] = days / kDaysPerMonth;
  }
  return j;
}

std::string EnergyTradeoffCsv(const std::vector<std::string>& archs,
                              const PlatformConstants& platform,
                              const std::vector<double>& intervals_s) {
  std::ostringstream out;
  out << "interval_s";
  for (const auto& a : archs) out << ",train_j_per_day_" << a << ",label_j_per_day_" << a;
  out << '\n';
  for (double t : intervals_s) {
    out << t;
    for (const auto& a : archs) {
      const ArchPlatform& c = platform.For(a);
      out << ',' << TrainingEnergyPerDayJ(c.e_train_j, t, platform.train_trigger_samples) << ','
          << LabelingEnergyPerDayJ(c.p_label_active_avg_mw);
    }
    out << '\n';
  }
  return out.str();
}

}  // namespace skws
