// Command-line harness: latency / efficiency / errorfloor / bench /
// ge-validate experiments emitting CSV, plus encode/decode streaming the
// coded-packet wire format.

#include <algorithm>
#include <fstream>
#include <iostream>
#include <memory>
#include <sstream>
#include <vector>

#include <CLI11.hpp>

#include "mettle/mettle.hpp"

namespace {

using namespace mettle;

struct CommonOpts {
  std::string config_doc; // consumed by expand_config before parsing
  std::string code = "mettle";
  std::string c_text = "11/200";
  std::uint32_t w = 600;
  std::uint32_t l = 4;
  std::uint64_t k = 100000;
  std::uint64_t trials = 50;
  std::uint64_t seed = 1;
  std::string channel = "bec:0.01";
  std::uint32_t payload_size = 1500;
  std::string out;
  std::uint32_t threads = 0;
  bool stationary = false;
};

void finalize_defaults(const CLI::App* cmd, CommonOpts& opts) {
  // block-code evaluations default to k = 400 unless overridden
  if (opts.code == "lt" && cmd->get_option("--k")->count() == 0) {
    opts.k = 400;
  }
}

void add_common(CLI::App* cmd, CommonOpts& opts) {
  cmd->option_defaults()->multi_option_policy(CLI::MultiOptionPolicy::TakeLast);
  cmd->add_option("--config", opts.config_doc,
                  "flat key=value config file; explicit flags override");
  cmd->add_option("--code", opts.code, "code family: mettle | lt")
      ->check(CLI::IsMember({"mettle", "lt"}));
  cmd->add_option("--c", opts.c_text, "overhead ratio, rational p/q or decimal");
  cmd->add_option("--w", opts.w, "coupling window (ball positions)");
  cmd->add_option("--l", opts.l, "edges per ball");
  cmd->add_option("--k", opts.k, "stream length (mettle) / block size (lt)");
  cmd->add_option("--trials", opts.trials, "trials per experiment point");
  cmd->add_option("--seed", opts.seed, "base seed; trial t uses seed + t");
  cmd->add_option("--channel", opts.channel,
                  "bec:<eps> | ge:<p_g2b>,<p_b2g>,<eps_g>,<eps_b> | ge1..ge5");
  cmd->add_option("--payload-size", opts.payload_size, "payload bytes per symbol");
  cmd->add_option("--out", opts.out, "output path (default stdout)");
  cmd->add_option("--threads", opts.threads, "worker threads (0 = all cores)");
  cmd->add_flag("--stationary", opts.stationary,
                "start GE channels from the stationary distribution");
}

ExperimentConfig to_config(const CommonOpts& opts) {
  ExperimentConfig cfg;
  cfg.code = opts.code == "lt" ? CodeKind::kLt : CodeKind::kMettle;
  cfg.code_params.c = Rational::parse(opts.c_text);
  cfg.code_params.w = opts.w;
  cfg.code_params.l = opts.l;
  cfg.code_params.seed = opts.seed;
  cfg.code_params.symbol_size = opts.payload_size;
  cfg.lt_params.k = opts.k;
  cfg.lt_params.seed = opts.seed;
  cfg.lt_params.symbol_size = opts.payload_size;
  cfg.channel = parse_channel_spec(opts.channel);
  cfg.k = opts.k;
  cfg.trials = opts.trials;
  cfg.seed = opts.seed;
  cfg.threads = opts.threads;
  cfg.stationary_start = opts.stationary;
  return cfg;
}

class OutStream {
public:
  explicit OutStream(const std::string& path) {
    if (!path.empty() && path != "-") {
      file_ = std::make_unique<std::ofstream>(path, std::ios::binary);
      if (!*file_) {
        throw std::runtime_error("cannot open output file: " + path);
      }
    }
  }
  std::ostream& get() { return file_ ? *file_ : std::cout; }

private:
  std::unique_ptr<std::ofstream> file_;
};

class InStream {
public:
  explicit InStream(const std::string& path) {
    if (!path.empty() && path != "-") {
      file_ = std::make_unique<std::ifstream>(path, std::ios::binary);
      if (!*file_) {
        throw std::runtime_error("cannot open input file: " + path);
      }
    }
  }
  std::istream& get() { return file_ ? *file_ : std::cin; }

private:
  std::unique_ptr<std::ifstream> file_;
};

int cmd_latency(const CommonOpts& opts) {
  const ExperimentConfig cfg = to_config(opts);
  const LatencyResult res = run_latency_experiment(cfg);
  OutStream out(opts.out);
  write_latency_csv(out.get(), cfg, res);
  std::cerr << "latency: channel=" << cfg.channel.name
            << " c=" << cfg.code_params.c.str() << " avg=" << res.avg_latency
            << " p95=" << res.p95_latency << " failures=" << res.stalled_trials
            << "/" << cfg.trials << "\n";
  return 0;
}

int cmd_efficiency(const CommonOpts& opts, double target, double grid_max) {
  ExperimentConfig cfg = to_config(opts);
  const std::uint64_t grid_den = 200; // 0.5 percentage-point steps
  const std::uint64_t hi = static_cast<std::uint64_t>(grid_max * grid_den);
  const EfficiencyResult res = run_efficiency_search(cfg, target, grid_den, 1, hi);
  OutStream out(opts.out);
  write_efficiency_csv(out.get(), cfg, res);
  if (res.found) {
    std::cerr << "efficiency: channel=" << cfg.channel.name << " minimal c="
              << res.c_min.str() << " (" << 100 * res.c_min.to_double()
              << "%); " << res.note << "\n";
  } else {
    std::cerr << "efficiency: " << res.note << "\n";
  }
  return res.found ? 0 : 2;
}

int cmd_errorfloor(const CommonOpts& opts) {
  const ExperimentConfig cfg = to_config(opts);
  const ErrorFloorResult res = run_errorfloor_experiment(cfg);
  OutStream out(opts.out);
  out.get() << "balls,isolated,rate,predicted\n"
            << res.balls << ',' << res.isolated << ','
            << detail::fmt_double(res.rate) << ','
            << detail::fmt_double(res.predicted) << '\n';
  return 0;
}

int cmd_bench(const CommonOpts& opts) {
  const ExperimentConfig cfg = to_config(opts);
  const BenchResult res = run_bench(cfg);
  OutStream out(opts.out);
  out.get() << "k,trials,decoded,decode_us_per_symbol,peel_ops_per_symbol,stalled\n"
            << cfg.k << ',' << cfg.trials << ',' << res.decoded << ','
            << detail::fmt_double(res.decode_us_per_symbol) << ','
            << detail::fmt_double(res.peel_ops_per_symbol) << ','
            << (res.stalled ? 1 : 0) << '\n';
  std::cerr << "bench: " << res.decode_us_per_symbol
            << " us/symbol (wall clock, informational), "
            << res.peel_ops_per_symbol << " peel ops/symbol\n";
  return 0;
}

int cmd_ge_validate(const CommonOpts& opts, std::uint64_t steps) {
  OutStream out(opts.out);
  out.get() << "channel,steps,empirical,formula,rel_error\n";
  const auto run_one = [&](const ChannelSpec& spec) {
    const GeValidateResult res =
        run_ge_validate(spec, steps, opts.seed, opts.stationary);
    out.get() << res.channel << ',' << res.steps << ','
              << detail::fmt_double(res.empirical) << ','
              << detail::fmt_double(res.formula) << ','
              << detail::fmt_double(res.rel_error) << '\n';
  };
  if (opts.channel == "all") {
    for (const auto& [name, params] : named_ge_channels()) {
      ChannelSpec spec;
      spec.kind = ChannelSpec::Kind::kGe;
      spec.ge = params;
      spec.name = name;
      run_one(spec);
    }
  } else {
    run_one(parse_channel_spec(opts.channel));
  }
  return 0;
}

int cmd_encode(const CommonOpts& opts, const std::string& in_path) {
  CodeParams params;
  params.c = Rational::parse(opts.c_text);
  params.w = opts.w;
  params.l = opts.l;
  params.seed = opts.seed;
  params.symbol_size = opts.payload_size;
  params.validate();
  InStream in(in_path);
  OutStream out(opts.out);
  Encoder enc(params);
  std::vector<std::uint8_t> payload(params.symbol_size);
  const auto sink = [&](std::uint64_t bin, ByteSpan bytes) {
    wire::write_symbol(out.get(), bin, bytes);
  };
  std::uint64_t pushed = 0;
  while (pushed < opts.k) {
    in.get().read(reinterpret_cast<char*>(payload.data()), params.symbol_size);
    const std::streamsize got = in.get().gcount();
    if (got == 0) break;
    if (static_cast<std::uint32_t>(got) != params.symbol_size) {
      std::cerr << "encode: trailing " << got
                << " bytes are not a whole symbol; zero-padded\n";
      std::fill(payload.begin() + got, payload.end(), 0);
    }
    enc.push(ByteSpan(payload), sink);
    ++pushed;
    if (static_cast<std::uint32_t>(got) != params.symbol_size) break;
  }
  enc.flush(sink);
  std::cerr << "encode: " << pushed << " source symbols -> "
            << enc.bins_emitted() << " coded symbols\n";
  return 0;
}

int cmd_decode(const CommonOpts& opts, const std::string& in_path) {
  CodeParams params;
  params.c = Rational::parse(opts.c_text);
  params.w = opts.w;
  params.l = opts.l;
  params.seed = opts.seed;
  params.symbol_size = opts.payload_size;
  params.validate();
  InStream in(in_path);
  OutStream out(opts.out);
  Decoder dec(params, opts.k);
  wire::TraceReader reader(in.get());
  std::vector<std::vector<std::uint8_t>> recovered(opts.k);
  std::uint64_t next_index = 0;
  while (auto sym = reader.next()) {
    while (next_index < sym->bin_index) {
      dec.mark_erased(next_index++); // gap: inferred erasure
    }
    dec.push(sym->bin_index, ByteSpan(sym->payload),
             [&](std::uint64_t x, double, ByteSpan value) {
               if (x < opts.k) recovered[x].assign(value.begin(), value.end());
             });
    next_index = sym->bin_index + 1;
  }
  // A truncated trace may end before the last leading edges; the lost tail
  // counts as erased.
  if (opts.k > 0) {
    while (next_index <= tle_bin(params, opts.k - 1)) {
      dec.mark_erased(next_index++);
    }
  }
  const TrialReport rep = dec.finalize_report(false, true);
  std::uint64_t missing = 0;
  for (std::uint64_t x = 0; x < opts.k; ++x) {
    if (recovered[x].empty()) {
      recovered[x].assign(params.symbol_size, 0); // zero-fill undecoded
      ++missing;
    }
    out.get().write(reinterpret_cast<const char*>(recovered[x].data()),
                    params.symbol_size);
  }
  std::cerr << "decode: " << rep.decoded << "/" << rep.total_balls
            << " symbols recovered, " << rep.error_floor_balls
            << " error-floor, " << rep.stalled_balls << " stalled"
            << (missing ? " (undecoded positions zero-filled)" : "") << "\n";
  return rep.decoded == opts.k ? 0 : 3;
}

} // namespace

// Expands "--config <file>" (flat key=value lines, # comments) into ordinary
// flags placed before the user's own, so explicit flags override the file.
std::vector<std::string> expand_config(int argc, char** argv) {
  std::vector<std::string> args(argv + 1, argv + argc);
  std::string path;
  std::vector<std::string> rest;
  for (std::size_t i = 0; i < args.size(); ++i) {
    if (args[i] == "--config" && i + 1 < args.size()) {
      path = args[++i];
    } else if (args[i].rfind("--config=", 0) == 0) {
      path = args[i].substr(9);
    } else {
      rest.push_back(args[i]);
    }
  }
  if (path.empty()) return rest;
  std::ifstream file(path);
  if (!file) {
    throw std::runtime_error("cannot open config file: " + path);
  }
  std::vector<std::string> from_file;
  std::string line;
  while (std::getline(file, line)) {
    const auto hash = line.find('#');
    if (hash != std::string::npos) line.resize(hash);
    std::string key, value;
    const auto eq = line.find('=');
    if (eq != std::string::npos) {
      key = line.substr(0, eq);
      value = line.substr(eq + 1);
    } else {
      std::istringstream pair(line);
      pair >> key >> value;
    }
    const auto trim = [](std::string& text) {
      const auto begin = text.find_first_not_of(" \t\r");
      const auto end = text.find_last_not_of(" \t\r");
      text = begin == std::string::npos ? "" : text.substr(begin, end - begin + 1);
    };
    trim(key);
    trim(value);
    if (key.empty()) continue;
    from_file.push_back("--" + key + "=" + value);
  }
  // keep the subcommand token first, then file options, then explicit flags
  std::vector<std::string> out;
  std::size_t i = 0;
  if (!rest.empty() && rest[0][0] != '-') {
    out.push_back(rest[0]);
    i = 1;
  }
  out.insert(out.end(), from_file.begin(), from_file.end());
  out.insert(out.end(), rest.begin() + i, rest.end());
  return out;
}

int main(int argc, char** argv) {
  CLI::App app{"streaming erasure code evaluation harness"};
  app.require_subcommand(1);

  CommonOpts opts;
  double target = 1e-3;
  double grid_max = 0.5;
  std::uint64_t steps = 1000000;
  std::string in_path;

  CLI::App* latency = app.add_subcommand("latency", "decoding latency over trials");
  add_common(latency, opts);

  CLI::App* efficiency =
      app.add_subcommand("efficiency", "minimal overhead meeting a failure target");
  add_common(efficiency, opts);
  efficiency->add_option("--target", target, "failure probability target");
  efficiency->add_option("--grid-max", grid_max, "largest overhead to consider");

  CLI::App* errorfloor =
      app.add_subcommand("errorfloor", "isolated-undecodable rate under a BEC");
  add_common(errorfloor, opts);

  CLI::App* bench = app.add_subcommand("bench", "decode cost microbenchmark");
  add_common(bench, opts);

  CLI::App* ge_validate = app.add_subcommand(
      "ge-validate", "empirical GE erasure rate vs the stationary formula");
  add_common(ge_validate, opts);
  ge_validate->add_option("--steps", steps, "channel steps to simulate");

  CLI::App* encode =
      app.add_subcommand("encode", "raw source symbols -> coded-symbol trace");
  add_common(encode, opts);
  encode->add_option("--in", in_path, "input payload file (default stdin)");

  CLI::App* decode =
      app.add_subcommand("decode", "coded-symbol trace -> recovered symbols");
  add_common(decode, opts);
  decode->add_option("--in", in_path, "input trace file (default stdin)");
  decode->get_option("--k")->required(); // plain termination carries no length


  try {
    std::vector<std::string> args = expand_config(argc, argv);
    std::reverse(args.begin(), args.end()); // CLI11 consumes back-to-front
    app.parse(args);
  } catch (const CLI::ParseError& e) {
    return app.exit(e);
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }

  try {
    for (const CLI::App* sub : app.get_subcommands()) {
      finalize_defaults(sub, opts);
    }
    if (latency->parsed()) return cmd_latency(opts);
    if (efficiency->parsed()) return cmd_efficiency(opts, target, grid_max);
    if (errorfloor->parsed()) return cmd_errorfloor(opts);
    if (bench->parsed()) return cmd_bench(opts);
    if (ge_validate->parsed()) return cmd_ge_validate(opts, steps);
    if (encode->parsed()) return cmd_encode(opts, in_path);
    if (decode->parsed()) return cmd_decode(opts, in_path);
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 0;
}
