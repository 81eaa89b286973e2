#include <doctest.h>

#include <fstream>
#include <random>
#include <set>

#include "sevpr/errors.hpp"
#include "sevpr/event_io.hpp"
#include "sevpr/synth.hpp"
#include "testutil.hpp"

using namespace sevpr;
using testutil::TmpDir;

namespace {

EventStream random_stream(std::uint64_t seed, int n, int w, int h) {
  std::mt19937_64 rng(seed);
  EventStream s;
  s.resolution = {w, h};
  std::uint64_t t = 0;
  for (int i = 0; i < n; ++i) {
    t += rng() % 5000;
    Event e;
    e.t = t;
    e.x = std::uint16_t(rng() % w);
    e.y = std::uint16_t(rng() % h);
    e.p = (rng() & 1) ? 1 : -1;
    s.events.push_back(e);
  }
  return s;
}

} // namespace

TEST_CASE("csv load maps fields directly and accepts both polarity conventions") {
  TmpDir tmp("evio");
  {
    std::ofstream out(tmp.file("e.csv"));
    out << "1000,5,7,1\n2000,1,2,-1\n3000,3,4,0\n";
  }
  io::LoadStats stats;
  EventStream s = io::load_events_csv(tmp.file("e.csv"), {32, 32}, &stats);
  REQUIRE(s.events.size() == 3);
  CHECK(s.events[0].t == 1000);
  CHECK(s.events[0].x == 5);
  CHECK(s.events[0].y == 7);
  CHECK(s.events[0].p == 1);
  CHECK(s.events[1].p == -1);
  CHECK(s.events[2].p == -1); // 0 maps to -1
  CHECK(stats.records == 3);
  CHECK(stats.unsorted_pairs == 0);
}

TEST_CASE("empty file loads as empty stream with manifest resolution") {
  TmpDir tmp("evio");
  { std::ofstream out(tmp.file("empty.csv")); }
  EventStream s = io::load_events_csv(tmp.file("empty.csv"), {16, 8});
  CHECK(s.events.empty());
  CHECK(s.resolution.width == 16);
  CHECK(s.resolution.height == 8);
}

TEST_CASE("csv errors carry line numbers") {
  TmpDir tmp("evio");
  {
    std::ofstream out(tmp.file("bad.csv"));
    out << "1000,5,7,1\n2000,99,2,1\n";
  }
  CHECK_THROWS_WITH_AS(io::load_events_csv(tmp.file("bad.csv"), {32, 32}),
                       doctest::Contains(":2:"), io_error);

  {
    std::ofstream out(tmp.file("badp.csv"));
    out << "1000,5,7,3\n";
  }
  CHECK_THROWS_AS(io::load_events_csv(tmp.file("badp.csv"), {32, 32}), io_error);
}

TEST_CASE("unsorted input is stably sorted and counted") {
  TmpDir tmp("evio");
  {
    std::ofstream out(tmp.file("u.csv"));
    out << "3000,1,1,1\n1000,2,2,1\n2000,3,3,-1\n";
  }
  io::LoadStats stats;
  EventStream s = io::load_events_csv(tmp.file("u.csv"), {8, 8}, &stats);
  CHECK(stats.unsorted_pairs == 1);
  CHECK(s.events[0].t == 1000);
  CHECK(s.events[1].t == 2000);
  CHECK(s.events[2].t == 3000);
}

TEST_CASE("binary round-trips random streams bit-exactly") {
  TmpDir tmp("evio");
  // Oracle: the identity. Compare loaded events field by field, then the
  // re-saved bytes.
  EventStream s = random_stream(99, 256, 64, 48);
  io::save_events_bin(s, tmp.file("r.bin"));
  EventStream back = io::load_events_bin(tmp.file("r.bin"));
  REQUIRE(back.events.size() == s.events.size());
  CHECK(back.resolution == s.resolution);
  for (std::size_t i = 0; i < s.events.size(); ++i)
    CHECK(back.events[i] == s.events[i]);

  io::save_events_bin(back, tmp.file("r2.bin"));
  CHECK(testutil::read_file(tmp.file("r.bin")) ==
        testutil::read_file(tmp.file("r2.bin")));
}

TEST_CASE("csv round-trips random streams exactly") {
  TmpDir tmp("evio");
  EventStream s = random_stream(7, 128, 32, 32);
  io::save_events_csv(s, tmp.file("r.csv"));
  EventStream back = io::load_events_csv(tmp.file("r.csv"), s.resolution);
  REQUIRE(back.events.size() == s.events.size());
  for (std::size_t i = 0; i < s.events.size(); ++i)
    CHECK(back.events[i] == s.events[i]);
}

TEST_CASE("binary loader reports corruption offsets") {
  TmpDir tmp("evio");
  {
    std::ofstream out(tmp.file("bad.bin"), std::ios::binary);
    out << "EVT1";
    const char res[4] = {32, 0, 32, 0};
    out.write(res, 4);
    out << "junk"; // not a multiple of the record size
  }
  CHECK_THROWS_AS(io::load_events_bin(tmp.file("bad.bin")), io_error);
  {
    std::ofstream out(tmp.file("nomagic.bin"), std::ios::binary);
    out << "XXXXXXXX";
  }
  CHECK_THROWS_WITH_AS(io::load_events_bin(tmp.file("nomagic.bin")),
                       doctest::Contains("offset 0"), io_error);
}

TEST_CASE("slice_volumes partitions the timeline") {
  EventStream s;
  s.resolution = {8, 8};
  for (std::uint64_t t : {0ull, 100000ull, 300000ull})
    s.events.push_back(Event{t, 1, 1, 1});
  auto vols = io::slice_volumes(s, 0.25, {});
  REQUIRE(vols.size() == 2); // hand partition: {0,100k} | {300k}
  CHECK(vols[0].events.size() == 2);
  CHECK(vols[1].events.size() == 1);
  CHECK(vols[0].t_start == 0);
  CHECK(vols[0].t_end == 250000);
  CHECK(vols[1].t_start == 250000);
  CHECK(!vols[0].pose.has_value());
}

TEST_CASE("slice_volumes: singleton stream gives exactly one volume") {
  EventStream s;
  s.resolution = {8, 8};
  s.events.push_back(Event{12345, 2, 3, -1});
  auto vols = io::slice_volumes(s, 0.25, {});
  REQUIRE(vols.size() == 1);
  CHECK(vols[0].events.size() == 1);
}

TEST_CASE("slice_volumes: empty stream is an empty sequence") {
  EventStream s;
  s.resolution = {8, 8};
  CHECK(io::slice_volumes(s, 0.25, {}).empty());
}

TEST_CASE("slice_volumes assigns the pose nearest to the window midpoint") {
  EventStream s;
  s.resolution = {8, 8};
  s.events.push_back(Event{0, 1, 1, 1});
  std::vector<GeoPose> poses{
      GeoPose{125000, 10.0, 0.0, CoordMode::Planar},  // exactly at midpoint
      GeoPose{400000, 20.0, 0.0, CoordMode::Planar},
  };
  auto vols = io::slice_volumes(s, 0.25, poses);
  REQUIRE(vols.size() == 1);
  REQUIRE(vols[0].pose.has_value());
  CHECK(vols[0].pose->a == 10.0);
}

TEST_CASE("slice_volumes retains empty middle windows; union preserves events") {
  EventStream s = random_stream(3, 64, 16, 16);
  // Force a gap so at least one window is empty.
  Event late = s.events.back();
  late.t += 2000000;
  s.events.push_back(late);
  auto vols = io::slice_volumes(s, 0.1, {});
  std::size_t total = 0;
  bool saw_empty = false;
  std::uint64_t prev_end = vols.front().t_start;
  for (const auto& v : vols) {
    CHECK(v.t_start == prev_end); // consecutive, non-overlapping
    prev_end = v.t_end;
    total += v.events.size();
    saw_empty |= v.events.empty();
    for (const auto& e : v.events) {
      CHECK(e.t >= v.t_start);
      CHECK(e.t < v.t_end);
    }
  }
  CHECK(total == s.events.size());
  CHECK(saw_empty);
}

TEST_CASE("geo_distance examples") {
  GeoPose a{0, 0.0, 0.0, CoordMode::Geographic};
  CHECK(io::geo_distance(a, a) == 0.0);

  GeoPose b{0, 0.0, 180.0, CoordMode::Geographic};
  // Half great circle: pi * R.
  CHECK(io::geo_distance(a, b) ==
        doctest::Approx(3.14159265358979323846 * 6371000.0).epsilon(5e-8));

  GeoPose p1{0, 0.0, 0.0, CoordMode::Planar};
  GeoPose p2{0, 3.0, 4.0, CoordMode::Planar};
  CHECK(io::geo_distance(p1, p2) == doctest::Approx(5.0));

  CHECK_THROWS_AS(io::geo_distance(a, p1), config_error);
}

TEST_CASE("geo_distance is symmetric and satisfies the triangle inequality") {
  std::mt19937_64 rng(11);
  auto rand_pose = [&](CoordMode m) {
    GeoPose p;
    p.mode = m;
    if (m == CoordMode::Geographic) {
      p.a = -90.0 + 180.0 * (double(rng() % 100000) / 100000.0);
      p.b = -180.0 + 360.0 * (double(rng() % 100000) / 100000.0);
    } else {
      p.a = -1e4 + 2e4 * (double(rng() % 100000) / 100000.0);
      p.b = -1e4 + 2e4 * (double(rng() % 100000) / 100000.0);
    }
    return p;
  };
  for (CoordMode m : {CoordMode::Geographic, CoordMode::Planar}) {
    for (int trial = 0; trial < 200; ++trial) {
      GeoPose x = rand_pose(m), y = rand_pose(m), z = rand_pose(m);
      const double xy = io::geo_distance(x, y);
      const double yx = io::geo_distance(y, x);
      const double yz = io::geo_distance(y, z);
      const double xz = io::geo_distance(x, z);
      CHECK(xy == yx);
      CHECK(xy >= 0.0);
      CHECK(xz <= xy + yz + 1e-6 * (xy + yz));
    }
  }
}

TEST_CASE("manifest round-trip and validation") {
  TmpDir tmp("evio");
  EventStream s = random_stream(5, 16, 32, 24);
  io::save_events_bin(s, tmp.file("t.bin"));
  DatasetManifest m;
  m.name = "t";
  m.event_path = tmp.file("t.bin");
  m.resolution = {32, 24};
  m.interval_s = 0.25;
  io::save_manifest(m, tmp.file("t.manifest"));
  DatasetManifest back = io::load_manifest(tmp.file("t.manifest"));
  CHECK(back.name == "t");
  CHECK(back.resolution == m.resolution);
  CHECK(back.event_path == m.event_path);

  // Missing referenced file.
  DatasetManifest bad = m;
  bad.event_path = tmp.file("nope.bin");
  io::save_manifest(bad, tmp.file("bad.manifest"));
  CHECK_THROWS_AS(io::load_manifest(tmp.file("bad.manifest")), io_error);
}

TEST_CASE("synth is bit-deterministic under a fixed seed") {
  TmpDir tmp("synth");
  io::SynthConfig cfg;
  cfg.n_places = 4;
  cfg.traverses = 2;
  cfg.resolution = {16, 16};
  cfg.events_per_place = 12;
  cfg.noise_rate = 0.25;
  cfg.seed = 7;
  io::synth_dataset(cfg, tmp.file("a"));
  io::synth_dataset(cfg, tmp.file("b"));
  for (const char* f :
       {"traverse_0.events.bin", "traverse_0.poses.csv", "traverse_1.events.bin",
        "traverse_1.poses.csv", "dataset.txt"}) {
    CHECK(testutil::read_file(tmp.file(std::string("a/") + f)) ==
          testutil::read_file(tmp.file(std::string("b/") + f)));
  }
}

TEST_CASE("synth without noise reuses each place's structure pixels") {
  TmpDir tmp("synth");
  io::SynthConfig cfg;
  cfg.n_places = 3;
  cfg.traverses = 2;
  cfg.resolution = {16, 16};
  cfg.events_per_place = 10;
  cfg.noise_rate = 0.0;
  cfg.seed = 3;
  auto ms = io::synth_dataset(cfg, tmp.str());
  auto stream0 = io::load_events(ms[0]);
  auto stream1 = io::load_events(ms[1]);
  auto vols0 = io::slice_volumes(stream0, cfg.interval_s, {});
  auto vols1 = io::slice_volumes(stream1, cfg.interval_s, {});
  REQUIRE(vols0.size() == 3);
  REQUIRE(vols1.size() == 3);
  for (int k = 0; k < 3; ++k) {
    std::set<std::pair<int, int>> px0, px1;
    for (const auto& e : vols0[std::size_t(k)].events) px0.insert({e.x, e.y});
    for (const auto& e : vols1[std::size_t(k)].events) px1.insert({e.x, e.y});
    CHECK(px0 == px1); // traverse 2 fires exactly place k's pixel set
  }
}

TEST_CASE("synth pose geometry separates places at the 75 m radius") {
  TmpDir tmp("synth");
  io::SynthConfig cfg;
  cfg.n_places = 20;
  cfg.traverses = 2;
  cfg.resolution = {32, 32};
  cfg.events_per_place = 16;
  cfg.seed = 5;
  auto ms = io::synth_dataset(cfg, tmp.str());
  auto poses0 = io::load_poses_csv(ms[0].pose_path, CoordMode::Planar);
  auto poses1 = io::load_poses_csv(ms[1].pose_path, CoordMode::Planar);
  REQUIRE(poses0.size() == 20);
  REQUIRE(poses1.size() == 20);
  double max_same = 0, min_cross = 1e18;
  for (int i = 0; i < 20; ++i)
    for (int j = 0; j < 20; ++j) {
      const double d = io::geo_distance(poses0[std::size_t(i)],
                                        poses1[std::size_t(j)]);
      if (i == j)
        max_same = std::max(max_same, d);
      else
        min_cross = std::min(min_cross, d);
    }
  CHECK(max_same < 75.0);
  CHECK(min_cross > 75.0);
}

TEST_CASE("synth rejects impossible configurations") {
  TmpDir tmp("synth");
  io::SynthConfig cfg;
  cfg.n_places = 1;
  CHECK_THROWS_AS(io::synth_dataset(cfg, tmp.str()), config_error);
  cfg.n_places = 2;
  cfg.resolution = {2, 2};
  cfg.events_per_place = 64; // 4 pixels cannot host 64 distinct events
  CHECK_THROWS_AS(io::synth_dataset(cfg, tmp.str()), config_error);
}
