#pragma once

// Vehicle trajectory samples and their ingestion.

#include <traffic2d/error.hpp>

#include <charconv>
#include <cmath>
#include <functional>
#include <istream>
#include <map>
#include <ostream>
#include <sstream>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

namespace traffic2d {

enum class VehicleClass { Car, Truck };

inline std::string to_string(VehicleClass c) { return c == VehicleClass::Car ? "car" : "truck"; }

inline VehicleClass parse_vehicle_class(std::string_view s) {
  if (s == "car") return VehicleClass::Car;
  if (s == "truck") return VehicleClass::Truck;
  throw InputError("unknown vehicle class '" + std::string(s) + "'");
}

struct TrajectorySample {
  std::string vehicle_id;
  VehicleClass vehicle_class = VehicleClass::Car;
  double t = 0.0;
  double x = 0.0;
  double y = 0.0;
};

using TrajectoryDataset = std::vector<TrajectorySample>;

/// Samples of one vehicle in input order.
struct VehicleTrack {
  std::string vehicle_id;
  VehicleClass vehicle_class = VehicleClass::Car;
  std::vector<double> t, x, y;
};

/// Groups samples by vehicle, ordered by first appearance.
inline std::vector<VehicleTrack> group_by_vehicle(const TrajectoryDataset& data) {
  std::vector<VehicleTrack> tracks;
  std::map<std::string, std::size_t> index;
  for (const auto& s : data) {
    auto [it, inserted] = index.try_emplace(s.vehicle_id, tracks.size());
    if (inserted) tracks.push_back({s.vehicle_id, s.vehicle_class, {}, {}, {}});
    VehicleTrack& tr = tracks[it->second];
    if (tr.vehicle_class != s.vehicle_class) {
      throw InputError("vehicle " + s.vehicle_id + " changes class");
    }
    tr.t.push_back(s.t);
    tr.x.push_back(s.x);
    tr.y.push_back(s.y);
  }
  return tracks;
}

/// Checks finiteness, per-vehicle time ordering and class, and, if lx > 0,
/// x in [0, lx].
inline void validate_dataset(const TrajectoryDataset& data, double lx = 0.0) {
  std::map<std::string, double> last_t;
  std::map<std::string, VehicleClass> cls;
  for (const auto& s : data) {
    if (!std::isfinite(s.t) || !std::isfinite(s.x) || !std::isfinite(s.y)) {
      throw InputError("non-finite sample for vehicle " + s.vehicle_id);
    }
    if (lx > 0.0 && (s.x < 0.0 || s.x > lx)) {
      throw InputError("sample of vehicle " + s.vehicle_id + " outside [0, Lx]");
    }
    if (cls.try_emplace(s.vehicle_id, s.vehicle_class).first->second != s.vehicle_class) {
      throw InputError("vehicle " + s.vehicle_id + " changes class");
    }
    auto [it, inserted] = last_t.try_emplace(s.vehicle_id, s.t);
    if (!inserted) {
      if (s.t < it->second) throw InputError("time decreases for vehicle " + s.vehicle_id);
      it->second = s.t;
    }
  }
}

namespace detail {

inline std::vector<std::string_view> split_csv_line(std::string_view line) {
  std::vector<std::string_view> out;
  std::size_t start = 0;
  for (;;) {
    const std::size_t comma = line.find(',', start);
    out.push_back(line.substr(start, comma == std::string_view::npos ? comma : comma - start));
    if (comma == std::string_view::npos) break;
    start = comma + 1;
  }
  for (auto& f : out) {
    while (!f.empty() && (f.front() == ' ' || f.front() == '\t')) f.remove_prefix(1);
    while (!f.empty() && (f.back() == ' ' || f.back() == '\t' || f.back() == '\r')) f.remove_suffix(1);
  }
  return out;
}

inline double parse_double(std::string_view s, std::size_t line_no) {
  double v = 0.0;
  const auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc{} || ptr != s.data() + s.size()) {
    throw InputError("line " + std::to_string(line_no) + ": bad number '" + std::string(s) + "'");
  }
  return v;
}

}  // namespace detail

inline constexpr std::string_view kTrajectoryHeader = "vehicle_id,class,t_s,x_m,y_m";

/// Reads the native CSV format (header `vehicle_id,class,t_s,x_m,y_m`).
inline TrajectoryDataset read_trajectory_csv(std::istream& in) {
  std::string line;
  if (!std::getline(in, line)) throw InputError("empty trajectory file");
  if (!line.empty() && line.back() == '\r') line.pop_back();
  if (line != kTrajectoryHeader) {
    throw InputError("unexpected trajectory header '" + line + "'");
  }
  TrajectoryDataset out;
  std::size_t line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty() || line == "\r") continue;
    const auto f = detail::split_csv_line(line);
    if (f.size() != 5) throw InputError("line " + std::to_string(line_no) + ": expected 5 fields");
    if (f[0].empty()) throw InputError("line " + std::to_string(line_no) + ": empty vehicle_id");
    out.push_back({std::string(f[0]), parse_vehicle_class(f[1]), detail::parse_double(f[2], line_no),
                   detail::parse_double(f[3], line_no), detail::parse_double(f[4], line_no)});
  }
  validate_dataset(out);
  return out;
}

inline void write_trajectory_csv(std::ostream& out, const TrajectoryDataset& data) {
  out << kTrajectoryHeader << '\n';
  out.precision(17);
  for (const auto& s : data) {
    out << s.vehicle_id << ',' << to_string(s.vehicle_class) << ',' << s.t << ',' << s.x << ','
        << s.y << '\n';
  }
}

/// Named ingestion formats. "csv" is always present; further readers can be
/// registered for external datasets without touching the pipeline.
class TrajectoryAdapterRegistry {
public:
  using Reader = std::function<TrajectoryDataset(std::istream&)>;

  TrajectoryAdapterRegistry() { readers_.emplace("csv", read_trajectory_csv); }

  void add(std::string name, Reader reader) {
    if (!reader) throw ParameterError("adapter '" + name + "' has no reader");
    if (!readers_.emplace(name, std::move(reader)).second) {
      throw ParameterError("adapter '" + name + "' already registered");
    }
  }

  bool contains(const std::string& name) const { return readers_.count(name) != 0; }

  TrajectoryDataset read(const std::string& name, std::istream& in) const {
    const auto it = readers_.find(name);
    if (it == readers_.end()) throw InputError("unknown trajectory format '" + name + "'");
    TrajectoryDataset data = it->second(in);
    validate_dataset(data);
    return data;
  }

  std::vector<std::string> names() const {
    std::vector<std::string> out;
    for (const auto& [k, v] : readers_) out.push_back(k);
    return out;
  }

private:
  std::map<std::string, Reader> readers_;
};

}  // namespace traffic2d
