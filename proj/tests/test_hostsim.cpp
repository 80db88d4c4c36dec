#include <doctest.h>

#include <cstdlib>
#include <random>

#include "numasched/hostsim.hpp"
#include "numasched/reporter.hpp"
#include "numasched/topology.hpp"
#include "test_util.hpp"

using namespace numasched;

namespace {

std::string scenarios_dir() {
  const char* env = std::getenv("NUMASCHED_SCENARIOS");
  if (env) return env;
  return std::string(SCENARIO_DIR);
}

std::string minimal_scenario() {
  return R"({
    "topology": {"nodes": [{"id": 0, "cores": "0", "mem_total_pages": 100}]},
    "tasks": [{"pid": 1, "base_rate": 10, "work_total": 50, "pages": {"0": 10}}],
    "params": {"alpha": 0.5, "beta": 1.0}
  })";
}

SimHost random_host(std::mt19937& rng) {
  SimHost host;
  int nodes = 1 + static_cast<int>(rng() % 4);
  int core = 0;
  for (int id = 0; id < nodes; ++id) {
    NumaNode node;
    node.id = id;
    int cores = 1 + static_cast<int>(rng() % 4);
    for (int c = 0; c < cores; ++c) node.core_ids.insert(core++);
    node.mem_total_pages = 500 + static_cast<long>(rng() % 1500);
    node.mem_free_pages = node.mem_total_pages;
    host.topology.nodes.push_back(node);
  }
  for (int i = 0; i < nodes; ++i) {
    std::vector<int> row(nodes, 20);
    row[i] = 10;
    host.topology.distances.push_back(row);
  }
  CoreSet all;
  for (const auto& n : host.topology.nodes)
    all.insert(n.core_ids.begin(), n.core_ids.end());

  int tasks = 1 + static_cast<int>(rng() % 6);
  for (int i = 0; i < tasks; ++i) {
    SimTask t;
    t.pid = 100 + i;
    t.profile.name = "task" + std::to_string(t.pid);
    t.base_rate = 1.0 + (rng() % 20);
    t.work_total = 100 + (rng() % 500);
    t.work_done = (rng() % 100) / 100.0 * t.work_total;
    t.access_intensity = (rng() % 101) / 100.0;
    t.affinity = all;
    int piles = static_cast<int>(rng() % 3) + 1;
    for (int p = 0; p < piles; ++p)
      t.pages[rng() % nodes] += static_cast<long>(rng() % 300);
    t.pages = nonzero_pages(t.pages);
    host.tasks.push_back(t);
  }
  host.validate();
  return host;
}

}  // namespace

TEST_SUITE("hostsim") {

TEST_CASE("load_scenario fills defaults for a minimal host") {
  SimHost host = load_scenario(minimal_scenario());
  REQUIRE(host.tasks.size() == 1);
  CHECK(host.tasks[0].affinity == CoreSet{0});  // all cores
  CHECK(host.tasks[0].importance == 1.0);
  CHECK(host.tasks[0].profile.name == "custom");
  CHECK(host.topology.distances == std::vector<std::vector<int>>{{10}});
  CHECK(host.params.alpha == 0.5);
}

TEST_CASE("load_scenario rejects bad input naming the field") {
  CHECK_THROWS_WITH_AS(
      load_scenario(R"({"topology": {"nodes": [{"id": 0, "cores": "0",
        "mem_total_pages": 100}]}, "tasks": [{"pid": 1, "pages": {"3": 5}}]})"),
      doctest::Contains("nonexistent node"), ParseError);
  CHECK_THROWS_WITH_AS(load_scenario(R"({"widgets": 3})"),
                       doctest::Contains("widgets"), ParseError);
  CHECK_THROWS_AS(load_scenario("not json"), ParseError);
  CHECK_THROWS_WITH_AS(
      load_scenario(R"({"topology": {"nodes": [{"id": 0, "cores": "0",
        "mem_total_pages": 100}]}, "tasks": [{"pid": 1, "profile": "quake"}]})"),
      doctest::Contains("quake"), ParseError);
}

TEST_CASE("the shipped scenario files load as declared") {
  SimHost mix = load_scenario_file(scenarios_dir() + "/parsec_mix.json");
  REQUIRE(mix.tasks.size() == 8);
  CHECK(mix.topology.node_count() == 4);
  CHECK(mix.topology.total_cores() == 40);
  int memory_bound = 0, cpu_bound = 0, important = 0;
  for (const auto& t : mix.tasks) {
    long onto_node0 = t.pages.count(0) ? t.pages.at(0) : 0;
    CHECK(onto_node0 == t.total_pages());  // all crowded on node 0
    if (t.access_intensity >= 0.89) ++memory_bound;
    if (t.access_intensity <= 0.1) ++cpu_bound;
    if (t.importance > 1.0) ++important;
  }
  CHECK(memory_bound == 4);  // bodytrack/freqmine get +0.2 from sharing=high
  CHECK(cpu_bound == 4);
  CHECK(important == 2);

  SimHost cal = load_scenario_file(scenarios_dir() + "/calibration.json");
  CHECK(cal.tasks.size() == 2);
  CHECK(cal.params.beta == 2.2);
}

TEST_CASE("profile characteristics adjust loaded tasks") {
  // canneal: sharing=high (+0.2 intensity), exchange=high (split pages)
  SimHost host = load_scenario(R"({
    "topology": {"nodes": [
      {"id": 0, "cores": "0", "mem_total_pages": 100},
      {"id": 1, "cores": "1", "mem_total_pages": 100}]},
    "tasks": [{"pid": 1, "profile": "canneal", "base_rate": 1,
               "work_total": 1, "pages": {"0": 10}, "access_intensity": 0.5}],
    "params": {"alpha": 0.5, "beta": 1.0}
  })");
  CHECK(host.tasks[0].access_intensity == doctest::Approx(0.7));
  CHECK(host.tasks[0].pages.at(0) == 5);
  CHECK(host.tasks[0].pages.at(1) == 5);

  CHECK(parsec_profiles().at("blackscholes").sharing == Sharing::Low);
  CHECK(parsec_profiles().at("x264").exchange == Exchange::High);
  CHECK(parsec_profiles().size() == 12);
}

TEST_CASE("effective_rate matches the contention model") {
  SimHost host = load_scenario(R"({
    "topology": {"nodes": [
      {"id": 0, "cores": "0", "mem_total_pages": 1000},
      {"id": 1, "cores": "1", "mem_total_pages": 1000}]},
    "tasks": [{"pid": 1, "base_rate": 10, "work_total": 100,
               "pages": {"0": 100}, "access_intensity": 1.0}],
    "params": {"alpha": 0.5, "beta": 1.0}
  })");
  assign_cores(host);

  SUBCASE("sole local task runs at base rate") {
    CHECK(effective_rate(host.tasks[0], host) == doctest::Approx(10.0));
  }

  SUBCASE("fully remote task with alpha 0.5 runs at half rate") {
    host.tasks[0].pages = {{1, 100}};
    // node 0 then holds nothing, so there is no pressure excess either
    CHECK(effective_rate(host.tasks[0], host) == doctest::Approx(5.0));
  }

  SUBCASE("no running core is a contract violation") {
    host.tasks[0].running_core.reset();
    CHECK_THROWS_AS(effective_rate(host.tasks[0], host), std::logic_error);
  }
}

TEST_CASE("calibration scenario crosses the 90% degradation line") {
  SimHost host = load_scenario_file(scenarios_dir() + "/calibration.json");
  assign_cores(host);
  const SimTask& task = *host.find_task(1);
  REQUIRE(task.running_core == 0);
  double rate = effective_rate(task, host);
  CHECK(rate <= 0.1 * task.base_rate);
  CHECK(1.0 - rate / task.base_rate >= 0.9);
}

TEST_CASE("sim_step advances work deterministically") {
  SimHost host = load_scenario(minimal_scenario());

  SUBCASE("one task at rate 10 gains 10 work units per second") {
    sim_step(host, 1.0);
    CHECK(host.tasks[0].work_done == doctest::Approx(10.0));
    CHECK(host.time == doctest::Approx(1.0));
  }

  SUBCASE("rendered CPU counters never decrease") {
    long long prev = -1;
    for (int i = 0; i < 8; ++i) {
      sim_step(host, 0.5);
      CHECK(host.tasks[0].utime_ticks() >= prev);
      prev = host.tasks[0].utime_ticks();
    }
  }

  SUBCASE("dt must be positive") {
    CHECK_THROWS_AS(sim_step(host, 0.0), std::invalid_argument);
    CHECK_THROWS_AS(sim_step(host, -1.0), std::invalid_argument);
  }

  SUBCASE("finished tasks stop progressing and release their core") {
    host.tasks[0].work_done = host.tasks[0].work_total;
    sim_step(host, 1.0);
    CHECK(host.tasks[0].work_done == host.tasks[0].work_total);
    CHECK(!host.tasks[0].running_core.has_value());
  }
}

TEST_CASE("two tasks pinned to one core: only the lower pid runs") {
  SimHost host = load_scenario(R"({
    "topology": {"nodes": [{"id": 0, "cores": "0-1", "mem_total_pages": 1000}]},
    "tasks": [
      {"pid": 1, "base_rate": 10, "work_total": 100, "pages": {"0": 10}, "affinity": "0"},
      {"pid": 2, "base_rate": 10, "work_total": 100, "pages": {"0": 10}, "affinity": "0"}],
    "params": {"alpha": 0.5, "beta": 1.0}
  })");
  sim_step(host, 1.0);
  CHECK(host.tasks[0].work_done > 0);
  CHECK(host.tasks[1].work_done == 0.0);
  CHECK(host.tasks[0].running_core == 0);
  CHECK(!host.tasks[1].running_core.has_value());
}

TEST_CASE("render_procfs emits parseable stat and numa_maps") {
  SimHost host = load_scenario(minimal_scenario());
  host.tasks[0].pages = {{0, 5}};
  assign_cores(host);
  FileTree tree = render_procfs(host);

  REQUIRE(tree.count("1/stat"));
  REQUIRE(tree.count("1/numa_maps"));
  CHECK(tree["1/numa_maps"].find("N0=5") != std::string::npos);

  TaskStat st = parse_proc_stat(tree["1/stat"]);
  CHECK(st.pid == 1);
  CHECK(st.comm == "custom");
  CHECK(st.state == 'R');

  SimHost empty;
  empty.topology = host.topology;
  CHECK(render_procfs(empty).empty());
}

TEST_CASE("procfs rendering round-trips through the monitor parsers") {
  std::mt19937 rng(2024);
  for (int iter = 0; iter < 60; ++iter) {
    SimHost host = random_host(rng);
    assign_cores(host);
    SnapshotBatch batch = collect_from_tree(render_procfs(host), host.time);
    REQUIRE(batch.snapshots.size() == host.tasks.size());
    for (std::size_t i = 0; i < host.tasks.size(); ++i) {
      const SimTask& task = host.tasks[i];
      const TaskSnapshot& snap = batch.snapshots[i];
      CHECK(snap.stat.pid == task.pid);
      CHECK(snap.numa.per_node_pages == nonzero_pages(task.pages));
      CHECK(snap.numa.total_pages == task.total_pages());
      CHECK(snap.stat.utime_ticks == task.utime_ticks());
      CHECK(snap.stat.last_cpu == task.running_core.value_or(0));
    }
  }
}

TEST_CASE("sysfs rendering round-trips through discover_topology") {
  std::mt19937 rng(4096);
  for (int iter = 0; iter < 20; ++iter) {
    SimHost host = random_host(rng);
    TempDir dir("sysfs");
    write_file_tree(render_sysfs(host), dir.str());
    NumaTopology parsed = discover_topology(dir.str());
    NumaTopology truth = host.current_topology();
    REQUIRE(parsed.node_count() == truth.node_count());
    for (int i = 0; i < parsed.node_count(); ++i) {
      CHECK(parsed.nodes[i].core_ids == truth.nodes[i].core_ids);
      CHECK(parsed.nodes[i].mem_total_pages == truth.nodes[i].mem_total_pages);
      CHECK(parsed.nodes[i].mem_free_pages == truth.nodes[i].mem_free_pages);
    }
    CHECK(parsed.distances == truth.distances);
  }

  SimHost one = load_scenario(minimal_scenario());
  FileTree tree = render_sysfs(one);
  CHECK(tree.at("devices/system/node/node0/distance") == "10\n");
}

TEST_CASE("sim backend transfers page counts and rejects bad calls") {
  SimHost host = load_scenario(R"({
    "topology": {"nodes": [
      {"id": 0, "cores": "0", "mem_total_pages": 1000},
      {"id": 1, "cores": "1", "mem_total_pages": 1000}]},
    "tasks": [{"pid": 1, "base_rate": 10, "work_total": 100,
               "pages": {"0": 5, "1": 2}, "access_intensity": 0.5}],
    "params": {"alpha": 0.5, "beta": 1.0}
  })");
  SimBackend backend(host);

  SUBCASE("migrate moves counts and reports zero unmoved") {
    auto st = backend.migrate_pages(1, {0}, 1);
    CHECK(st.ok);
    CHECK(st.unmoved == 0);
    CHECK(host.tasks[0].pages == PageMap{{0, 0}, {1, 7}});
    CHECK(backend.mutation_count() == 1);
  }

  SUBCASE("unknown pid or node errors, empty affinity errors") {
    CHECK(!backend.migrate_pages(9, {0}, 1).ok);
    CHECK(!backend.migrate_pages(1, {0}, 9).ok);
    CHECK(!backend.set_affinity(1, {}).ok);
    CHECK(!backend.set_affinity(1, {42}).ok);
    CHECK(!backend.current_affinity(9).has_value());
    CHECK(backend.mutation_count() == 0);
  }

  SUBCASE("pages are conserved across any call sequence") {
    std::mt19937 rng(7);
    long before = host.tasks[0].total_pages();
    for (int i = 0; i < 200; ++i) {
      int from = static_cast<int>(rng() % 2);
      int to = static_cast<int>(rng() % 2);
      backend.migrate_pages(1, {from}, to);
      if (rng() % 4 == 0) sim_step(host, 0.1);
      CHECK(host.tasks[0].total_pages() == before);
    }
  }

  SUBCASE("narrowing affinity away from the running core reschedules") {
    assign_cores(host);
    REQUIRE(host.tasks[0].running_core == 0);
    backend.set_affinity(1, {1});
    CHECK(!host.tasks[0].running_core.has_value());
    sim_step(host, 0.1);
    CHECK(host.tasks[0].running_core == 1);
  }
}

TEST_CASE("more competitor pages on the running node never speed a task up") {
  std::mt19937 rng(606);
  for (int iter = 0; iter < 80; ++iter) {
    SimHost host = random_host(rng);
    if (host.tasks.size() < 2) continue;
    assign_cores(host);
    SimTask& subject = host.tasks[0];
    if (!subject.running_core) continue;
    int node = host.topology.node_of_core(*subject.running_core);

    double before = effective_rate(subject, host);
    host.tasks[1].pages[node] += 200;  // competitor grows on our node
    double after = effective_rate(subject, host);
    CHECK(after <= before + 1e-12);
  }
}

TEST_CASE("run_policy_experiment") {
  SUBCASE("horizon must be positive") {
    SimHost host = load_scenario(minimal_scenario());
    CHECK_THROWS_AS(run_policy_experiment(host, Policy::Noop, 0.0),
                    std::invalid_argument);
  }

  SUBCASE("local, uncontended tasks tie across every policy") {
    SimHost host = load_scenario_file(scenarios_dir() + "/uniform_local.json");
    std::vector<ExperimentResult> results;
    for (Policy p : {Policy::Noop, Policy::StaticPin, Policy::AutoBalance,
                     Policy::Proposed})
      results.push_back(run_policy_experiment(host, p, 60.0));
    for (const auto& r : results) {
      REQUIRE(r.makespan.has_value());
      CHECK(*r.makespan == *results[0].makespan);
      REQUIRE(r.tasks.size() == 2);
      for (std::size_t i = 0; i < r.tasks.size(); ++i) {
        CHECK(r.tasks[i].completed);
        CHECK(r.tasks[i].completion_time ==
              results[0].tasks[i].completion_time);
      }
    }
    CHECK(results.back().moves_applied == 0);  // nothing worth doing
  }

  SUBCASE("identical invocations give byte-identical output") {
    SimHost host = load_scenario_file(scenarios_dir() + "/parsec_mix.json");
    auto once = run_policy_experiment(host, Policy::Proposed, 400.0);
    auto twice = run_policy_experiment(host, Policy::Proposed, 400.0);
    CHECK(experiment_to_json({once}, "x", 400.0) ==
          experiment_to_json({twice}, "x", 400.0));
    REQUIRE(once.makespan.has_value());
  }

  SUBCASE("proposed intervenes on the crowded scenario and noop does not") {
    SimHost host = load_scenario_file(scenarios_dir() + "/parsec_mix.json");
    auto noop = run_policy_experiment(host, Policy::Noop, 400.0);
    auto proposed = run_policy_experiment(host, Policy::Proposed, 400.0);
    CHECK(noop.moves_applied == 0);
    CHECK(proposed.moves_applied > 0);
    CHECK(proposed.reports_emitted >= 1);
    REQUIRE(noop.makespan.has_value());
    REQUIRE(proposed.makespan.has_value());
    CHECK(*proposed.makespan < *noop.makespan);
  }
}

TEST_CASE("policy names round trip") {
  for (Policy p : {Policy::Noop, Policy::StaticPin, Policy::AutoBalance,
                   Policy::Proposed})
    CHECK(policy_from_name(policy_name(p)) == p);
  CHECK(!policy_from_name("nope").has_value());
}

}  // TEST_SUITE
