#include "sevpr/event_io.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "sevpr/errors.hpp"

namespace sevpr::io {

namespace {

constexpr char kEventMagic[4] = {'E', 'V', 'T', '1'};
constexpr std::size_t kRecordSize = 8 + 2 + 2 + 1;

[[noreturn]] void bad_record(const std::string& path, std::size_t line,
                             const std::string& what) {
  throw io_error(path + ":" + std::to_string(line) + ": " + what);
}

// Validates invariants shared by both formats and applies the stable sort
// for mildly out-of-order inputs.
void finalize_stream(EventStream& s, const std::string& path, LoadStats* stats) {
  std::size_t unsorted = 0;
  for (std::size_t i = 1; i < s.events.size(); ++i)
    if (s.events[i].t < s.events[i - 1].t) ++unsorted;
  if (unsorted > 0)
    std::stable_sort(s.events.begin(), s.events.end(),
                     [](const Event& a, const Event& b) { return a.t < b.t; });
  if (stats) {
    stats->records = s.events.size();
    stats->unsorted_pairs = unsorted;
  }
  for (const Event& e : s.events) {
    if (e.x >= s.resolution.width || e.y >= s.resolution.height)
      throw io_error(path + ": event coordinate (" + std::to_string(e.x) + "," +
                     std::to_string(e.y) + ") outside resolution " +
                     std::to_string(s.resolution.width) + "x" +
                     std::to_string(s.resolution.height));
    if (e.p != 1 && e.p != -1)
      throw io_error(path + ": polarity " + std::to_string(int(e.p)) +
                     " not in {-1,+1}");
  }
}

bool parse_i64(std::string_view sv, long long& out) {
  const char* b = sv.data();
  const char* e = b + sv.size();
  auto r = std::from_chars(b, e, out);
  return r.ec == std::errc() && r.ptr == e;
}

bool parse_f64(std::string_view sv, double& out) {
  const char* b = sv.data();
  const char* e = b + sv.size();
  auto r = std::from_chars(b, e, out);
  return r.ec == std::errc() && r.ptr == e;
}

std::string_view trim(std::string_view sv) {
  while (!sv.empty() && (sv.front() == ' ' || sv.front() == '\t' || sv.front() == '\r'))
    sv.remove_prefix(1);
  while (!sv.empty() && (sv.back() == ' ' || sv.back() == '\t' || sv.back() == '\r'))
    sv.remove_suffix(1);
  return sv;
}

std::vector<std::string_view> split_csv(std::string_view line) {
  std::vector<std::string_view> out;
  std::size_t pos = 0;
  while (true) {
    std::size_t comma = line.find(',', pos);
    if (comma == std::string_view::npos) {
      out.push_back(trim(line.substr(pos)));
      break;
    }
    out.push_back(trim(line.substr(pos, comma - pos)));
    pos = comma + 1;
  }
  return out;
}

void put_u16(std::string& buf, std::uint16_t v) {
  buf.push_back(char(v & 0xff));
  buf.push_back(char(v >> 8));
}

void put_u64(std::string& buf, std::uint64_t v) {
  for (int i = 0; i < 8; ++i) buf.push_back(char((v >> (8 * i)) & 0xff));
}

std::uint16_t get_u16(const unsigned char* p) {
  return std::uint16_t(p[0] | (p[1] << 8));
}

std::uint64_t get_u64(const unsigned char* p) {
  std::uint64_t v = 0;
  for (int i = 7; i >= 0; --i) v = (v << 8) | p[i];
  return v;
}

} // namespace

EventStream load_events_csv(const std::string& path, Resolution res,
                            LoadStats* stats) {
  std::ifstream in(path);
  if (!in) throw io_error("cannot open event file: " + path);
  EventStream s;
  s.resolution = res;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    std::string_view sv = trim(line);
    if (sv.empty()) continue;
    auto fields = split_csv(sv);
    if (fields.size() != 4) bad_record(path, lineno, "expected 4 fields t,x,y,p");
    long long t, x, y, p;
    if (!parse_i64(fields[0], t) || t < 0) bad_record(path, lineno, "bad timestamp");
    if (!parse_i64(fields[1], x) || x < 0) bad_record(path, lineno, "bad x");
    if (!parse_i64(fields[2], y) || y < 0) bad_record(path, lineno, "bad y");
    if (!parse_i64(fields[3], p)) bad_record(path, lineno, "bad polarity");
    if (p == 0) p = -1; // {0,1} convention
    if (p != 1 && p != -1) bad_record(path, lineno, "polarity not in {-1,0,1}");
    if (x >= res.width || y >= res.height)
      bad_record(path, lineno, "coordinate outside resolution");
    s.events.push_back(Event{std::uint64_t(t), std::uint16_t(x), std::uint16_t(y),
                             std::int8_t(p)});
  }
  finalize_stream(s, path, stats);
  return s;
}

EventStream load_events_bin(const std::string& path, LoadStats* stats) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw io_error("cannot open event file: " + path);
  std::string blob((std::istreambuf_iterator<char>(in)),
                   std::istreambuf_iterator<char>());
  if (blob.size() < 8 || std::memcmp(blob.data(), kEventMagic, 4) != 0)
    throw io_error(path + ": offset 0: missing EVT1 magic");
  const auto* p = reinterpret_cast<const unsigned char*>(blob.data());
  EventStream s;
  s.resolution.width = get_u16(p + 4);
  s.resolution.height = get_u16(p + 6);
  std::size_t body = blob.size() - 8;
  if (body % kRecordSize != 0)
    throw io_error(path + ": offset " + std::to_string(blob.size()) +
                   ": truncated record (payload not a multiple of " +
                   std::to_string(kRecordSize) + " bytes)");
  std::size_t n = body / kRecordSize;
  s.events.reserve(n);
  for (std::size_t i = 0; i < n; ++i) {
    const unsigned char* r = p + 8 + i * kRecordSize;
    Event e;
    e.t = get_u64(r);
    e.x = get_u16(r + 8);
    e.y = get_u16(r + 10);
    e.p = std::int8_t(r[12]);
    if (e.p != 1 && e.p != -1)
      throw io_error(path + ": offset " + std::to_string(8 + i * kRecordSize + 12) +
                     ": polarity not in {-1,+1}");
    s.events.push_back(e);
  }
  finalize_stream(s, path, stats);
  return s;
}

void save_events_csv(const EventStream& s, const std::string& path) {
  std::ofstream out(path, std::ios::trunc);
  if (!out) throw io_error("cannot write event file: " + path);
  for (const Event& e : s.events)
    out << e.t << ',' << e.x << ',' << e.y << ',' << int(e.p) << '\n';
  if (!out) throw io_error("write failed: " + path);
}

void save_events_bin(const EventStream& s, const std::string& path) {
  std::string buf;
  buf.reserve(8 + s.events.size() * kRecordSize);
  buf.append(kEventMagic, 4);
  put_u16(buf, std::uint16_t(s.resolution.width));
  put_u16(buf, std::uint16_t(s.resolution.height));
  for (const Event& e : s.events) {
    put_u64(buf, e.t);
    put_u16(buf, e.x);
    put_u16(buf, e.y);
    buf.push_back(char(e.p));
  }
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw io_error("cannot write event file: " + path);
  out.write(buf.data(), std::streamsize(buf.size()));
  if (!out) throw io_error("write failed: " + path);
}

std::vector<GeoPose> load_poses_csv(const std::string& path, CoordMode mode) {
  std::ifstream in(path);
  if (!in) throw io_error("cannot open pose file: " + path);
  std::vector<GeoPose> poses;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    std::string_view sv = trim(line);
    if (sv.empty()) continue;
    auto fields = split_csv(sv);
    if (fields.size() != 3) bad_record(path, lineno, "expected 3 fields t,a,b");
    long long t;
    double a, b;
    if (!parse_i64(fields[0], t) || t < 0) bad_record(path, lineno, "bad timestamp");
    if (!parse_f64(fields[1], a)) bad_record(path, lineno, "bad coordinate");
    if (!parse_f64(fields[2], b)) bad_record(path, lineno, "bad coordinate");
    if (mode == CoordMode::Geographic &&
        (a < -90.0 || a > 90.0 || b < -180.0 || b > 180.0))
      bad_record(path, lineno, "lat/lon outside valid range");
    poses.push_back(GeoPose{std::uint64_t(t), a, b, mode});
  }
  std::stable_sort(poses.begin(), poses.end(),
                   [](const GeoPose& x, const GeoPose& y) { return x.t < y.t; });
  return poses;
}

void save_poses_csv(const std::vector<GeoPose>& poses, const std::string& path) {
  std::ofstream out(path, std::ios::trunc);
  if (!out) throw io_error("cannot write pose file: " + path);
  char buf[96];
  for (const GeoPose& p : poses) {
    std::snprintf(buf, sizeof buf, "%llu,%.9f,%.9f\n",
                  static_cast<unsigned long long>(p.t), p.a, p.b);
    out << buf;
  }
  if (!out) throw io_error("write failed: " + path);
}

DatasetManifest load_manifest(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw io_error("cannot open manifest: " + path);
  DatasetManifest m;
  std::filesystem::path base = std::filesystem::path(path).parent_path();
  std::string line;
  std::size_t lineno = 0;
  bool have_w = false, have_h = false;
  while (std::getline(in, line)) {
    ++lineno;
    std::string_view sv = trim(line);
    if (sv.empty() || sv.front() == '#') continue;
    std::size_t eq = sv.find('=');
    if (eq == std::string_view::npos) bad_record(path, lineno, "expected key=value");
    std::string key(trim(sv.substr(0, eq)));
    std::string val(trim(sv.substr(eq + 1)));
    long long iv = 0;
    if (key == "name") {
      m.name = val;
    } else if (key == "events") {
      m.event_path = (base / val).string();
    } else if (key == "poses") {
      m.pose_path = (base / val).string();
    } else if (key == "width") {
      if (!parse_i64(val, iv) || iv <= 0) bad_record(path, lineno, "bad width");
      m.resolution.width = int(iv);
      have_w = true;
    } else if (key == "height") {
      if (!parse_i64(val, iv) || iv <= 0) bad_record(path, lineno, "bad height");
      m.resolution.height = int(iv);
      have_h = true;
    } else if (key == "interval_s") {
      if (!parse_f64(val, m.interval_s) || m.interval_s <= 0)
        bad_record(path, lineno, "bad interval_s");
    } else if (key == "coord_mode") {
      if (val == "planar")
        m.coord_mode = CoordMode::Planar;
      else if (val == "geo")
        m.coord_mode = CoordMode::Geographic;
      else
        bad_record(path, lineno, "coord_mode must be planar or geo");
    } else if (key == "event_format") {
      if (val == "csv")
        m.event_format = DatasetManifest::EventFormat::Csv;
      else if (val == "binary")
        m.event_format = DatasetManifest::EventFormat::Binary;
      else
        bad_record(path, lineno, "event_format must be csv or binary");
    } else {
      bad_record(path, lineno, "unknown key '" + key + "'");
    }
  }
  if (m.event_path.empty()) throw io_error(path + ": missing events=");
  if (!have_w || !have_h) throw io_error(path + ": missing width=/height=");
  if (!std::filesystem::exists(m.event_path))
    throw io_error(path + ": referenced event file does not exist: " + m.event_path);
  if (!m.pose_path.empty() && !std::filesystem::exists(m.pose_path))
    throw io_error(path + ": referenced pose file does not exist: " + m.pose_path);
  return m;
}

void save_manifest(const DatasetManifest& m, const std::string& path) {
  std::ofstream out(path, std::ios::trunc);
  if (!out) throw io_error("cannot write manifest: " + path);
  std::filesystem::path base = std::filesystem::path(path).parent_path();
  auto rel = [&](const std::string& p) {
    return std::filesystem::proximate(p, base).generic_string();
  };
  out << "name=" << m.name << '\n';
  out << "events=" << rel(m.event_path) << '\n';
  if (!m.pose_path.empty()) out << "poses=" << rel(m.pose_path) << '\n';
  out << "width=" << m.resolution.width << '\n';
  out << "height=" << m.resolution.height << '\n';
  char buf[48];
  std::snprintf(buf, sizeof buf, "interval_s=%.6f\n", m.interval_s);
  out << buf;
  out << "coord_mode=" << (m.coord_mode == CoordMode::Planar ? "planar" : "geo") << '\n';
  out << "event_format="
      << (m.event_format == DatasetManifest::EventFormat::Csv ? "csv" : "binary")
      << '\n';
  if (!out) throw io_error("write failed: " + path);
}

EventStream load_events(const DatasetManifest& m, LoadStats* stats) {
  if (m.event_format == DatasetManifest::EventFormat::Csv)
    return load_events_csv(m.event_path, m.resolution, stats);
  EventStream s = load_events_bin(m.event_path, stats);
  if (!(s.resolution == m.resolution))
    throw io_error(m.event_path + ": resolution in file header disagrees with manifest");
  return s;
}

std::vector<EventVolume> slice_volumes(const EventStream& stream,
                                       double interval_s,
                                       const std::vector<GeoPose>& poses) {
  if (interval_s <= 0) throw config_error("slice interval must be > 0");
  std::vector<EventVolume> out;
  if (stream.events.empty()) return out;

  const auto interval_us = std::uint64_t(std::llround(interval_s * 1e6));
  if (interval_us == 0) throw config_error("slice interval rounds to 0 us");
  const std::uint64_t t0 = stream.events.front().t;
  const std::uint64_t t_last = stream.events.back().t;
  const std::uint64_t n = (t_last - t0) / interval_us + 1;

  out.resize(n);
  for (std::uint64_t k = 0; k < n; ++k) {
    EventVolume& v = out[k];
    v.t_start = t0 + k * interval_us;
    v.t_end = v.t_start + interval_us;
    v.resolution = stream.resolution;
    if (!poses.empty()) {
      const std::uint64_t mid = v.t_start + interval_us / 2;
      const GeoPose* best = nullptr;
      std::uint64_t best_d = 0;
      for (const GeoPose& p : poses) {
        std::uint64_t d = p.t > mid ? p.t - mid : mid - p.t;
        if (!best || d < best_d) { // ties keep the earlier pose
          best = &p;
          best_d = d;
        }
      }
      v.pose = *best;
    }
  }
  for (const Event& e : stream.events) {
    std::uint64_t k = (e.t - t0) / interval_us;
    out[k].events.push_back(e);
  }
  return out;
}

double geo_distance(const GeoPose& a, const GeoPose& b) {
  if (a.mode != b.mode)
    throw config_error("geo_distance: mixed coordinate modes");
  if (a.mode == CoordMode::Planar)
    return std::hypot(a.a - b.a, a.b - b.b);
  constexpr double kEarthRadiusM = 6371000.0;
  constexpr double kDeg2Rad = 3.14159265358979323846 / 180.0;
  const double phi1 = a.a * kDeg2Rad, phi2 = b.a * kDeg2Rad;
  const double dphi = (b.a - a.a) * kDeg2Rad;
  const double dlam = (b.b - a.b) * kDeg2Rad;
  const double s1 = std::sin(dphi / 2), s2 = std::sin(dlam / 2);
  const double h = s1 * s1 + std::cos(phi1) * std::cos(phi2) * s2 * s2;
  return 2.0 * kEarthRadiusM * std::asin(std::min(1.0, std::sqrt(h)));
}

} // namespace sevpr::io
