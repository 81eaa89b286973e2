#ifndef SEVPR_EVENT_HPP
#define SEVPR_EVENT_HPP

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

namespace sevpr {

// One asynchronous brightness-change event. Timestamps are microseconds.
struct Event {
  std::uint64_t t = 0;
  std::uint16_t x = 0;
  std::uint16_t y = 0;
  std::int8_t p = 1; // exactly -1 or +1
};

inline bool operator==(const Event& a, const Event& b) {
  return a.t == b.t && a.x == b.x && a.y == b.y && a.p == b.p;
}

struct Resolution {
  int width = 0;
  int height = 0;
  bool operator==(const Resolution&) const = default;
};

enum class CoordMode { Planar, Geographic };

// Timestamped position. In geographic mode a/b are latitude/longitude in
// degrees; in planar mode they are easting/northing in meters.
struct GeoPose {
  std::uint64_t t = 0;
  double a = 0.0;
  double b = 0.0;
  CoordMode mode = CoordMode::Planar;
};

// Ordered event sequence for one recording. Invariant: timestamps
// non-decreasing, coordinates inside the resolution, |p| == 1.
struct EventStream {
  std::vector<Event> events;
  Resolution resolution;
};

// All events of one time window, the unit of place matching.
// Invariant: t_start <= e.t < t_end for every event, t_end > t_start.
struct EventVolume {
  std::vector<Event> events;
  std::uint64_t t_start = 0;
  std::uint64_t t_end = 0;
  Resolution resolution;
  std::optional<GeoPose> pose;

  bool empty() const { return events.empty(); }
};

// Plain-text description of one recorded sequence: where the event and pose
// files live and how to slice them.
struct DatasetManifest {
  std::string name;
  std::string event_path;
  std::string pose_path;
  Resolution resolution;
  double interval_s = 0.25;
  CoordMode coord_mode = CoordMode::Planar;
  enum class EventFormat { Csv, Binary } event_format = EventFormat::Binary;
};

} // namespace sevpr

#endif
