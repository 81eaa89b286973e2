#ifndef SEVPR_EVENT_IO_HPP
#define SEVPR_EVENT_IO_HPP

#include <string>
#include <vector>

#include "sevpr/event.hpp"

namespace sevpr::io {

struct LoadStats {
  std::size_t records = 0;
  // Number of adjacent out-of-order pairs found before the stable sort.
  // Recorded datasets contain minor reordering, so this is a warning, not
  // an error.
  std::size_t unsorted_pairs = 0;
};

// CSV lines "t,x,y,p" with p in {-1,1}; p in {0,1} is also accepted with
// 0 mapped to -1. No header. Resolution comes from the caller (manifest).
EventStream load_events_csv(const std::string& path, Resolution res,
                            LoadStats* stats = nullptr);

// Binary layout: magic "EVT1", width u16, height u16, then packed records
// [t u64][x u16][y u16][p i8], all little-endian.
EventStream load_events_bin(const std::string& path, LoadStats* stats = nullptr);

void save_events_csv(const EventStream& s, const std::string& path);
void save_events_bin(const EventStream& s, const std::string& path);

// Pose CSV "t,lat,lon" (geographic) or "t,easting,northing" (planar).
std::vector<GeoPose> load_poses_csv(const std::string& path, CoordMode mode);
void save_poses_csv(const std::vector<GeoPose>& poses, const std::string& path);

// key=value manifest; relative file paths are resolved against the manifest
// location. Referenced files must exist.
DatasetManifest load_manifest(const std::string& path);
void save_manifest(const DatasetManifest& m, const std::string& path);

EventStream load_events(const DatasetManifest& m, LoadStats* stats = nullptr);

// Consecutive non-overlapping windows of the given width covering
// [first t, last t]. Empty windows are retained. Each volume gets the pose
// nearest in time to the window midpoint (ties toward the earlier pose), or
// none if no poses are given.
std::vector<EventVolume> slice_volumes(const EventStream& stream,
                                       double interval_s,
                                       const std::vector<GeoPose>& poses);

// Haversine meters on a sphere of radius 6371.0 km in geographic mode,
// Euclidean meters in planar mode. Mixing modes is an error.
double geo_distance(const GeoPose& a, const GeoPose& b);

} // namespace sevpr::io

#endif
