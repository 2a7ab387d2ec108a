// Copyright 2026 The tracekit Authors
// SPDX-License-Identifier: Apache-2.0

// Command-line front end: key generation, the two servers, the scenario
// simulator and the communication bench.

#include <csignal>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <memory>
#include <sstream>
#include <thread>

#include <CLI11.hpp>

#include "tracekit/channel.hpp"
#include "tracekit/collector.hpp"
#include "tracekit/errors.hpp"
#include "tracekit/harness/bench.hpp"
#include "tracekit/harness/config.hpp"
#include "tracekit/harness/report.hpp"
#include "tracekit/harness/scenario.hpp"
#include "tracekit/interpreter.hpp"
#include "tracekit/paillier_keys.hpp"

namespace {

using namespace tracekit;

constexpr int kExitMismatch = 1;
constexpr int kExitError = 2;

RandomSource rng_from(const std::optional<std::uint64_t>& seed) {
  return seed ? RandomSource(*seed) : RandomSource::from_os();
}

// Blocks SIGINT and SIGTERM in every thread started afterwards so that
// wait_for_shutdown() can collect them synchronously.
sigset_t block_shutdown_signals() {
  sigset_t set;
  sigemptyset(&set);
  sigaddset(&set, SIGINT);
  sigaddset(&set, SIGTERM);
  pthread_sigmask(SIG_BLOCK, &set, nullptr);
  return set;
}

int wait_for_shutdown(const sigset_t& set) {
  int sig = 0;
  sigwait(&set, &sig);
  return sig;
}

// One "code expiry" pair per line; '#' starts a comment.
void load_tokens(collector::Collector& c, const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot read token file " + path.string());
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (const auto hash = line.find('#'); hash != std::string::npos) line.resize(hash);
    std::istringstream fields(line);
    std::string code;
    std::int64_t expiry = 0;
    if (!(fields >> code)) continue;
    if (!(fields >> expiry)) throw ConfigError(path.string() + ":" + std::to_string(lineno) + ": expected code expiry");
    c.issue_token(code, expiry);
  }
}

paillier::PublicKey fetch_public_key(const std::string& interpreter) {
  const auto addr = channel::parse_address(interpreter);
  channel::TcpTransport t(addr, addr);
  const auto reply = channel::call(t, channel::Endpoint::interpreter, wire::PublishKey{});
  const auto* key = std::get_if<wire::PublishKey>(&reply);
  if (!key || !key->modulus) throw ProtocolError("interpreter did not publish a key");
  return paillier::PublicKey(*key->modulus);
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"tracekit: privacy-preserving hybrid contact tracing"};
  app.require_subcommand(1);

  // keygen
  unsigned key_bits = 2048;
  std::string key_out, pub_out;
  bool insecure = false;
  std::optional<std::uint64_t> key_seed;
  auto* keygen = app.add_subcommand("keygen", "generate a Paillier key pair");
  keygen->add_option("--bits", key_bits, "modulus size")->capture_default_str();
  keygen->add_option("--out", key_out, "key pair file")->required();
  keygen->add_option("--public-out", pub_out, "public key file (default: <out>.pub)");
  keygen->add_flag("--insecure", insecure, "allow moduli below 2048 bits");
  keygen->add_option("--seed", key_seed, "deterministic generation (testing only)");

  // serve-interpreter
  std::string interp_key, interp_listen = "127.0.0.1:7001";
  auto* serve_interp = app.add_subcommand("serve-interpreter", "decrypt masked values for clients");
  serve_interp->add_option("--key", interp_key, "key pair file")->required();
  serve_interp->add_option("--listen", interp_listen, "host:port")->capture_default_str();

  // serve-collector
  std::string coll_listen = "127.0.0.1:7000", coll_snapshot, coll_pub, coll_interp, coll_tokens;
  int save_every = 300;
  auto* serve_coll = app.add_subcommand("serve-collector", "store encrypted patient data and answer queries");
  serve_coll->add_option("--listen", coll_listen, "host:port")->capture_default_str();
  serve_coll->add_option("--snapshot", coll_snapshot, "state file, loaded if present and saved on exit");
  auto* pub_opt = serve_coll->add_option("--public-key", coll_pub, "public key file");
  auto* interp_opt = serve_coll->add_option("--interpreter", coll_interp, "fetch the public key from host:port");
  pub_opt->excludes(interp_opt);
  serve_coll->add_option("--tokens", coll_tokens, "upload codes, one 'code expiry' per line");
  serve_coll->add_option("--save-every", save_every, "seconds between snapshots (0: only on exit)")
      ->capture_default_str()
      ->check(CLI::NonNegativeNumber);

  // simulate
  std::string sim_config, sim_report, sim_jsonl, sim_timings;
  std::optional<std::uint64_t> sim_seed;
  std::optional<int> sim_threads;
  bool sim_tcp = false;
  auto* simulate = app.add_subcommand("simulate", "run a scenario and check every result against the oracle");
  simulate->add_option("--config", sim_config, "scenario file")->required()->check(CLI::ExistingFile);
  simulate->add_option("--seed", sim_seed, "override scenario.seed");
  simulate->add_option("--threads", sim_threads, "override scenario.threads");
  simulate->add_option("--report", sim_report, "text report")->required();
  simulate->add_option("--jsonl", sim_jsonl, "record stream (default: <report>.jsonl)");
  simulate->add_option("--timings", sim_timings, "wall-clock timings, kept out of the report");
  simulate->add_flag("--tcp", sim_tcp, "exchange frames over loopback sockets");

  // bench
  harness::BenchOptions bench_opts;
  std::string bench_report, bench_jsonl;
  auto* bench = app.add_subcommand("bench", "measure op latencies and communication against k");
  bench->add_option("--bits", bench_opts.key_bits, "modulus size")->capture_default_str();
  bench->add_option("--k-sweep", bench_opts.ks, "values of k")->delimiter(',')->capture_default_str();
  bench->add_option("--seed", bench_opts.seed)->capture_default_str();
  bench->add_option("--op-samples", bench_opts.op_samples)->capture_default_str();
  bench->add_option("--report", bench_report, "text report (default: stdout)");
  bench->add_option("--jsonl", bench_jsonl, "record stream");

  CLI11_PARSE(app, argc, argv);

  try {
    if (*keygen) {
      RandomSource rng = rng_from(key_seed);
      const auto keys = paillier::generate_keypair(
          key_bits, rng, insecure ? paillier::KeyMode::insecure_test : paillier::KeyMode::deployment);
      paillier::save_keypair(keys, key_out);
      paillier::save_public_key(keys.pub, pub_out.empty() ? key_out + ".pub" : pub_out);
      std::cout << "wrote " << key_out << " (" << keys.pub.bits() << " bits)\n";
      return 0;
    }

    if (*serve_interp) {
      const sigset_t signals = block_shutdown_signals();
      interpreter::RiskInterpreter interp(paillier::load_keypair(interp_key), RandomSource::from_os());
      channel::FrameServer server(channel::parse_address(interp_listen),
                                  [&](const wire::Message& m) { return interp.handle(m); });
      std::cout << "interpreter listening on port " << server.port() << std::endl;
      wait_for_shutdown(signals);
      server.stop();
      return 0;
    }

    if (*serve_coll) {
      const sigset_t signals = block_shutdown_signals();
      if (coll_pub.empty() && coll_interp.empty() && (coll_snapshot.empty() || !std::filesystem::exists(coll_snapshot))) {
        throw ConfigError("serve-collector needs --public-key, --interpreter or an existing --snapshot");
      }
      std::unique_ptr<collector::Collector> coll;
      if (!coll_snapshot.empty() && std::filesystem::exists(coll_snapshot)) {
        coll = collector::Collector::load(coll_snapshot, RandomSource::from_os());
        std::cout << "restored " << coll->cell_count() << " cells from " << coll_snapshot << "\n";
      } else {
        const auto pk = coll_pub.empty() ? fetch_public_key(coll_interp) : paillier::load_public_key(coll_pub);
        coll = std::make_unique<collector::Collector>(pk, collector::CollectorConfig{}, RandomSource::from_os());
      }
      if (!coll_tokens.empty()) load_tokens(*coll, coll_tokens);
      channel::FrameServer server(channel::parse_address(coll_listen),
                                  [&](const wire::Message& m) { return coll->handle(m); });
      std::cout << "collector listening on port " << server.port() << std::endl;

      std::atomic<bool> done{false};
      std::thread saver;
      if (!coll_snapshot.empty() && save_every > 0) {
        saver = std::thread([&] {
          auto next = std::chrono::steady_clock::now() + std::chrono::seconds(save_every);
          while (!done) {
            std::this_thread::sleep_for(std::chrono::milliseconds(200));
            if (std::chrono::steady_clock::now() < next) continue;
            coll->prune(collector::system_clock_seconds());
            coll->save(coll_snapshot);
            next += std::chrono::seconds(save_every);
          }
        });
      }
      wait_for_shutdown(signals);
      done = true;
      if (saver.joinable()) saver.join();
      server.stop();
      if (!coll_snapshot.empty()) {
        coll->prune(collector::system_clock_seconds());
        coll->save(coll_snapshot);
      }
      return 0;
    }

    if (*simulate) {
      auto config = harness::load_config(sim_config);
      if (sim_seed) config.seed = *sim_seed;
      if (sim_threads) config.threads = *sim_threads;
      config.validate();
      const auto result = harness::run_scenario(config, {.tcp = sim_tcp});
      harness::write_file(sim_report, harness::scenario_text(result));
      harness::write_file(sim_jsonl.empty() ? sim_report + ".jsonl" : sim_jsonl, harness::scenario_jsonl(result));
      if (!sim_timings.empty()) harness::write_file(sim_timings, harness::scenario_timing_jsonl(result));
      std::cout << result.exposures.size() << " queries, " << result.mismatches() << " mismatches\n";
      for (const auto& e : result.exposures) {
        if (e.matches()) continue;
        std::cerr << "day " << e.day << " agent " << e.agent << ": risk " << e.protocol.geolocation_risk
                  << " (oracle " << e.oracle.geolocation_risk << "), contacts " << e.protocol.ephid_contact_count
                  << " (oracle " << e.oracle.ephid_contact_count << ")\n";
      }
      return result.mismatches() == 0 ? 0 : kExitMismatch;
    }

    if (*bench) {
      const auto result = harness::run_bench(bench_opts);
      const auto text = harness::bench_text(result);
      if (bench_report.empty()) {
        std::cout << text;
      } else {
        harness::write_file(bench_report, text);
      }
      if (!bench_jsonl.empty()) harness::write_file(bench_jsonl, harness::bench_jsonl(result));
      return 0;
    }
  } catch (const std::exception& e) {
    std::cerr << "tracekit: " << e.what() << "\n";
    return kExitError;
  }
  return kExitError;
}
