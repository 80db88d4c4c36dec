#include <doctest.h>

#include <thread>

#include "numasched/procmon.hpp"
#include "test_util.hpp"

using namespace numasched;

TEST_SUITE("procmon") {

TEST_CASE("parse_proc_stat indexes the documented fields") {
  std::string line = make_stat_line(42, "app", 'S', 100, 50, 3);
  TaskStat st = parse_proc_stat(line);
  CHECK(st.pid == 42);
  CHECK(st.comm == "app");
  CHECK(st.state == 'S');
  CHECK(st.utime_ticks == 100);
  CHECK(st.stime_ticks == 50);
  CHECK(st.last_cpu == 3);
}

TEST_CASE("comm is taken between the first '(' and the last ')'") {
  std::string line = make_stat_line(7, "a b) (c", 'R', 1, 2, 0);
  TaskStat st = parse_proc_stat(line);
  CHECK(st.pid == 7);
  CHECK(st.comm == "a b) (c");
  CHECK(st.state == 'R');
}

TEST_CASE("parse_proc_stat rejects malformed lines") {
  CHECK_THROWS_AS(parse_proc_stat("42 (app S 1 2 3"), ParseError);
  CHECK_THROWS_AS(parse_proc_stat("42 (app) S 1 2 3 4 5 6 7"), ParseError);
  CHECK_THROWS_AS(parse_proc_stat(""), ParseError);
}

TEST_CASE("parse_numa_maps sums node tokens across lines") {
  std::string text =
      "7f00 default anon=4 N0=3 N1=1\n"
      "7f01 default N0=2\n";
  NumaMapsSummary sum = parse_numa_maps(text);
  CHECK(sum.per_node_pages == PageMap{{0, 5}, {1, 1}});
  CHECK(sum.total_pages == 6);
}

TEST_CASE("parse_numa_maps ignores lines without node tokens") {
  NumaMapsSummary sum =
      parse_numa_maps("7f02 default file=/lib/x kernelpagesize_kB=4\n");
  CHECK(sum.per_node_pages.empty());
  CHECK(sum.total_pages == 0);
  CHECK(parse_numa_maps("").total_pages == 0);
}

TEST_CASE("parse_numa_maps rejects bad node tokens, naming the line") {
  CHECK_THROWS_WITH_AS(parse_numa_maps("7f00 default N0=x\n"),
                       doctest::Contains("N0=x"), ParseError);
  CHECK_THROWS_AS(parse_numa_maps("7f00 default Nx=4\n"), ParseError);
}

TEST_CASE("total_pages equals the sum of per-node counts on fuzzed input") {
  std::mt19937 rng(99);
  for (int iter = 0; iter < 200; ++iter) {
    std::string text;
    long expect = 0;
    int lines = static_cast<int>(rng() % 5);
    for (int l = 0; l < lines; ++l) {
      text += "7f0" + std::to_string(l) + " default";
      if (rng() % 3 == 0) text += " anon=" + std::to_string(rng() % 100);
      int nodes = static_cast<int>(rng() % 4);
      for (int n = 0; n < nodes; ++n) {
        long pages = static_cast<long>(rng() % 1000);
        text += " N" + std::to_string(rng() % 4) + "=" + std::to_string(pages);
        expect += pages;
      }
      text += "\n";
    }
    NumaMapsSummary sum = parse_numa_maps(text);
    CHECK(sum.total_pages == expect);
    long per_node = 0;
    for (const auto& [node, pages] : sum.per_node_pages) per_node += pages;
    CHECK(per_node == sum.total_pages);
  }
}

namespace {

void write_proc_task(const TempDir& dir, int pid, const std::string& comm,
                     long long utime, const std::string& numa_maps,
                     unsigned long flags = 0) {
  dir.write(std::to_string(pid) + "/stat",
            make_stat_line(pid, comm, 'R', utime, 0, 0, flags));
  dir.write(std::to_string(pid) + "/numa_maps", numa_maps);
}

}  // namespace

TEST_CASE("list_candidate_pids keeps numeric names and drops self") {
  TempDir dir("proc");
  write_proc_task(dir, 1, "init", 5, "");
  write_proc_task(dir, 42, "app", 5, "");
  dir.write("self/stat", "not read\n");
  dir.write("sys/placeholder", "");

  MonitorSelection sel;
  sel.self_pid = -1;
  CHECK(list_candidate_pids(dir.str(), sel) == std::set<int>{1, 42});

  sel.self_pid = 42;
  CHECK(list_candidate_pids(dir.str(), sel) == std::set<int>{1});
}

TEST_CASE("list_candidate_pids filters by comm pattern") {
  TempDir dir("procpat");
  write_proc_task(dir, 10, "ferret", 0, "");
  write_proc_task(dir, 11, "ferret-worker", 0, "");
  write_proc_task(dir, 12, "vips", 0, "");

  MonitorSelection sel;
  sel.self_pid = -1;
  sel.patterns = {"ferret"};
  CHECK(list_candidate_pids(dir.str(), sel) == std::set<int>{10, 11});
}

TEST_CASE("list_candidate_pids honors explicit pid lists") {
  TempDir dir("procpids");
  write_proc_task(dir, 10, "a", 0, "");
  write_proc_task(dir, 11, "b", 0, "");
  MonitorSelection sel;
  sel.self_pid = -1;
  sel.pids = {11, 999};
  CHECK(list_candidate_pids(dir.str(), sel) == std::set<int>{11});
}

TEST_CASE("kernel threads are excluded from candidates") {
  TempDir dir("prockt");
  write_proc_task(dir, 20, "user", 0, "");
  write_proc_task(dir, 21, "kworker/0:1", 0, "", 0x00200000);
  MonitorSelection sel;
  sel.self_pid = -1;
  CHECK(list_candidate_pids(dir.str(), sel) == std::set<int>{20});
}

TEST_CASE("empty proc root yields no candidates") {
  TempDir dir("procempty");
  MonitorSelection sel;
  sel.self_pid = -1;
  CHECK(list_candidate_pids(dir.str(), sel).empty());
}

TEST_CASE("an unreadable proc root is fatal") {
  MonitorSelection sel;
  sel.self_pid = -1;
  CHECK_THROWS_AS(list_candidate_pids("/nonexistent/proc-root", sel),
                  std::runtime_error);
}

TEST_CASE("collect_snapshot snapshots live pids and skips vanished ones") {
  TempDir dir("collect");
  write_proc_task(dir, 1, "a", 10, "7f00 default N0=4\n");
  write_proc_task(dir, 2, "b", 20, "7f00 default N1=2\n");
  write_proc_task(dir, 3, "c", 30, "7f00 default N0=1\n");

  SnapshotBatch batch = collect_snapshot({1, 2, 3}, dir.str(), 5.0);
  REQUIRE(batch.snapshots.size() == 3);
  CHECK(batch.taken_at == 5.0);
  CHECK(batch.snapshots[0].stat.pid == 1);
  CHECK(batch.snapshots[0].numa.per_node_pages == PageMap{{0, 4}});
  for (const auto& s : batch.snapshots) CHECK(s.taken_at == 5.0);

  // pid 4 listed but gone by read time: silently skipped
  SnapshotBatch partial = collect_snapshot({1, 4}, dir.str(), 6.0);
  REQUIRE(partial.snapshots.size() == 1);
  CHECK(partial.snapshots[0].stat.pid == 1);

  // stat present but numa_maps vanished mid-read
  dir.write("5/stat", make_stat_line(5, "dying", 'R', 1, 1, 0));
  SnapshotBatch racy = collect_snapshot({1, 5}, dir.str(), 7.0);
  CHECK(racy.snapshots.size() == 1);
}

TEST_CASE("collect_snapshot never repeats a pid in one batch") {
  TempDir dir("uniq");
  write_proc_task(dir, 9, "x", 1, "");
  SnapshotBatch batch = collect_snapshot({9}, dir.str(), 1.0);
  std::set<int> pids;
  for (const auto& s : batch.snapshots)
    CHECK(pids.insert(s.stat.pid).second);
}

TEST_CASE("bounded queue drops the oldest batch when full") {
  BoundedQueue<int> q(4);
  for (int i = 0; i < 6; ++i) q.push(i);
  CHECK(q.dropped() == 2);
  CHECK(*q.pop() == 2);  // 0 and 1 were dropped
  q.close();
  CHECK(*q.pop() == 3);  // close drains remaining items first
  q.pop();
  q.pop();
  CHECK(!q.pop().has_value());
  CHECK(!q.push(7));
}

TEST_CASE("monitor_loop delivers one batch per simulated interval") {
  TempDir dir("loop");
  write_proc_task(dir, 1, "a", 10, "7f00 default N0=4\n");

  MonitorSelection sel;
  sel.self_pid = -1;
  BoundedQueue<SnapshotBatch> sink(16);
  StopSignal stop;

  SUBCASE("stop before the first tick delivers nothing") {
    ManualClock clock(5);
    stop.request_stop();
    monitor_loop(std::chrono::milliseconds(100), dir.str(), sel, clock, sink,
                 stop);
    sink.close();
    CHECK(!sink.pop().has_value());
  }

  SUBCASE("three ticks deliver exactly three batches, timestamps increasing") {
    ManualClock clock(3);
    monitor_loop(std::chrono::milliseconds(100), dir.str(), sel, clock, sink,
                 stop);
    sink.close();
    double prev = -1.0;
    int batches = 0;
    while (auto batch = sink.pop()) {
      ++batches;
      CHECK(batch->taken_at > prev);
      prev = batch->taken_at;
      REQUIRE(batch->snapshots.size() == 1);
    }
    CHECK(batches == 3);
  }

  SUBCASE("closed sink terminates the loop") {
    ManualClock clock(1000);
    sink.close();
    monitor_loop(std::chrono::milliseconds(100), dir.str(), sel, clock, sink,
                 stop);
    CHECK(true);  // reaching here is the contract
  }
}

TEST_CASE("utime+stime never decreases across live snapshots") {
  TempDir dir("mono");
  MonitorSelection sel;
  sel.self_pid = -1;
  long long prev = -1;
  for (int i = 0; i < 5; ++i) {
    write_proc_task(dir, 1, "a", 10 * i, "7f00 default N0=4\n");
    SnapshotBatch batch = collect_snapshot({1}, dir.str(), i + 1.0);
    REQUIRE(batch.snapshots.size() == 1);
    long long ticks = batch.snapshots[0].stat.utime_ticks +
                      batch.snapshots[0].stat.stime_ticks;
    CHECK(ticks >= prev);
    prev = ticks;
  }
}

}  // TEST_SUITE
