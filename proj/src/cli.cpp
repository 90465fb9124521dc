#include "dslit/commands.hpp"

#include "dslit/pgm.hpp"

#include <CLI11.hpp>

#include <algorithm>
#include <ostream>

namespace dslit {

namespace {

std::optional<double> parse_center(const std::string& text, const std::string& what) {
  if (text == "none") return std::nullopt;
  return parse_quantity(text, Quantity::length, what);
}

std::vector<std::size_t> parse_checkpoints(const std::string& text) {
  // Reuse the config parser so both spellings share one set of rules.
  return parse_config("buildup.checkpoints = " + text, "--checkpoints").checkpoints;
}

} // namespace

int run_cli(std::vector<std::string> args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Single-electron double-slit build-up simulator", "dslit"};
  app.set_version_flag("--version", std::string(version));
  app.require_subcommand(1);
  app.fallthrough();

  std::string config_path;
  std::optional<std::uint64_t> seed;
  std::string out_dir;
  std::optional<unsigned> threads;
  app.add_option("--config", config_path, "configuration file (defaults built in)");
  app.add_option("--seed", seed, "master seed");
  app.add_option("--out", out_dir, "output directory");
  app.add_option("--threads", threads, "worker threads")->check(CLI::Range(1u, 256u));

  auto* pattern = app.add_subcommand("pattern", "detector probability distribution for one mask position");
  std::string mask_center = "0";
  pattern->add_option("--mask-center", mask_center, "mask centre as a length, or 'none' for no mask");

  auto* sweep = app.add_subcommand("sweep", "profiles for a row of mask positions");
  std::string from = "-2.8 um";
  std::string to = "2.8 um";
  std::size_t steps = 41;
  sweep->add_option("--from", from, "first mask centre");
  sweep->add_option("--to", to, "last mask centre");
  sweep->add_option("--steps", steps, "number of centres");

  auto* buildup = app.add_subcommand("buildup", "simulate, render, detect and accumulate single-electron events");
  std::string checkpoints;
  buildup->add_option("--checkpoints", checkpoints, "comma-separated event counts for snapshots");

  auto* detect = app.add_subcommand("detect", "blob detection on 16-bit graymap frames");
  std::vector<std::string> files;
  detect->add_option("files", files, "frame files");

  std::vector<std::string> reversed(args.rbegin(), args.rend());
  try {
    app.parse(reversed);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e, out, err);
    return code == 0 ? 0 : 2;
  }

  try {
    RunConfig config = config_path.empty() ? parse_config(default_config_text(), "default.conf")
                                            : load_config(config_path);
    if (seed) config.sampler.seed = *seed;
    if (!out_dir.empty()) config.outputs.directory = out_dir;
    if (threads) config.threads = *threads;

    if (pattern->parsed()) {
      const auto summary = cmd_pattern(config, parse_center(mask_center, "--mask-center"));
      out << "pattern: " << to_string(summary.state) << ", output in " << config.outputs.directory << "\n";
    } else if (sweep->parsed()) {
      const auto centers = linspace(parse_quantity(from, Quantity::length, "--from"),
                                    parse_quantity(to, Quantity::length, "--to"), steps);
      const auto result = cmd_sweep(config, centers);
      out << "sweep: " << result.entries.size() << " profiles in " << config.outputs.directory << "\n";
    } else if (buildup->parsed()) {
      if (!checkpoints.empty()) config.checkpoints = parse_checkpoints(checkpoints);
      const auto summary = cmd_buildup(config);
      out << "buildup: " << summary.events.size() << " events, " << summary.blobs.size()
          << " blobs, KS " << summary.ks_events << ", output in " << config.outputs.directory << "\n";
    } else if (detect->parsed()) {
      const std::vector<std::filesystem::path> paths(files.begin(), files.end());
      const auto summary = cmd_detect(config, paths);
      out << "detect: " << summary.counts.size() << " files, output in " << config.outputs.directory << "\n";
    }
  } catch (const ConfigurationError& e) {
    err << "configuration error: " << e.what() << "\n";
    return 2;
  } catch (const DomainError& e) {
    err << "configuration error: " << e.what() << "\n";
    return 2;
  } catch (const IoError& e) {
    err << "i/o error: " << e.what() << "\n";
    return 3;
  } catch (const std::filesystem::filesystem_error& e) {
    err << "i/o error: " << e.what() << "\n";
    return 3;
  }
  return 0;
}

} // namespace dslit
