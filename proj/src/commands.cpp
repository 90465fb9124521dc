#include "dslit/commands.hpp"

#include "dslit/beamline.hpp"
#include "dslit/format.hpp"
#include "dslit/pgm.hpp"

#include <algorithm>
#include <cstdio>
#include <exception>
#include <fstream>
#include <thread>

namespace dslit {

namespace fs = std::filesystem;

namespace {

BeamlineOptions options_for(const RunConfig& config, int only_slit = 0) {
  return {config.illumination, only_slit};
}

fs::path output_dir(const RunConfig& config) {
  const fs::path dir(config.outputs.directory);
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec) throw IoError(dir.string() + ": cannot create output directory (" + ec.message() + ")");
  return dir;
}

void write_text(const fs::path& path, const std::string& text) {
  std::ofstream file(path, std::ios::binary);
  if (!file) throw IoError(path.string() + ": cannot open for writing");
  file << text;
  if (!file) throw IoError(path.string() + ": write failed");
}

std::string numbered(const char* stem, std::size_t index, int width, const char* extension) {
  char buffer[64];
  std::snprintf(buffer, sizeof(buffer), "%s%0*zu%s", stem, width, index, extension);
  return buffer;
}

void write_profile_csv(const fs::path& path, const IntensityProfiled& profile, double range) {
  Eigen::Index first = 0;
  Eigen::Index last = profile.size() - 1;
  if (range > 0.0) {
    first = std::max<Eigen::Index>(first, Eigen::Index(std::ceil((-range - profile.x0) / profile.dx)));
    last = std::min<Eigen::Index>(last, Eigen::Index(std::floor((range - profile.x0) / profile.dx)));
  }
  std::string text = "x_m,intensity\n";
  for (Eigen::Index i = first; i <= last; ++i)
    text += format_double(profile.x(i)) + "," + format_double(profile.values[i]) + "\n";
  write_text(path, text);
}

void write_profile_image(const fs::path& path, const IntensityProfiled& profile, double range) {
  const auto shown = range > 0.0 ? cropped(profile, -range, range) : profile;
  constexpr Eigen::Index columns = 1024;
  constexpr Eigen::Index rows = 64;
  Eigen::ArrayXXd image(rows, columns);
  for (Eigen::Index c = 0; c < columns; ++c) {
    const auto lo = c * shown.size() / columns;
    const auto hi = std::max(lo + 1, (c + 1) * shown.size() / columns);
    image.col(c).setConstant(shown.values.segment(lo, hi - lo).mean());
  }
  write_pgm(path, to_image(image));
}

std::string metadata_text(const RunConfig& config, const std::string& command) {
  std::string out = "program=dslit\nversion=" + std::string(version) + "\ncommand=" + command + "\n";
  out += "assumption.z_mask_to_detector=not given by the experiment, configured\n";
  out += "assumption.magnification=not given by the experiment, configured\n";
  out += "assumption.slit_height=not given by the experiment, configured\n";
  out += "assumption.total_rate=inferred from the inter-electron distance\n";
  out += "\n" + to_config_text(config);
  return out;
}

std::string state_text(SlitState state) { return to_string(state); }

SlitFractions fractions_for(const RunConfig& config, std::optional<double> mask_center) {
  if (!mask_center) return {1.0, 1.0};
  const auto layout = config.layout();
  return open_fraction(layout.doubleslit, make_mask(layout.mask_opening_width, *mask_center),
                       layout.z_doubleslit_to_mask);
}

void add_visibility(MetricsBlock& block, const std::optional<PatternVisibility>& v) {
  if (!v) {
    block.add("central_visibility", "none");
    block.add("first_order_visibility_negative", "none");
    block.add("first_order_visibility_positive", "none");
    return;
  }
  block.add("central_visibility", v->central);
  block.add("first_order_visibility_negative", v->first_order.negative);
  block.add("first_order_visibility_positive", v->first_order.positive);
}

std::string optional_number(const std::optional<double>& v) { return v ? format_double(*v) : "none"; }

template <typename Work>
void parallel_for(std::size_t count, unsigned threads, Work work) {
  threads = std::max(1u, std::min<unsigned>(threads, unsigned(std::max<std::size_t>(1, count))));
  if (threads == 1) {
    for (std::size_t i = 0; i < count; ++i) work(i);
    return;
  }
  std::vector<std::exception_ptr> errors(threads);
  std::vector<std::thread> pool;
  for (unsigned t = 0; t < threads; ++t)
    pool.emplace_back([&, t] {
      try {
        for (std::size_t i = t; i < count; i += threads) work(i);
      } catch (...) {
        errors[t] = std::current_exception();
      }
    });
  for (auto& th : pool) th.join();
  for (auto& e : errors)
    if (e) std::rethrow_exception(e);
}

} // namespace

IntensityProfiled incoherent_envelope(const RunConfig& config, std::optional<double> mask_center) {
  const auto layout = config.layout();
  const auto beam = config.beam();
  auto p1 = simulate_beamline(layout, beam, mask_center, config.grid, options_for(config, 1), false);
  const auto p2 = simulate_beamline(layout, beam, mask_center, config.grid, options_for(config, 2), false);
  p1.values += p2.values;
  return p1;
}

std::optional<PatternVisibility> pattern_visibility(const RunConfig& config, const IntensityProfiled& profile,
                                                    std::optional<double> mask_center) {
  if (profile.is_zero()) return std::nullopt;
  const auto envelope = incoherent_envelope(config, mask_center);
  const auto layout = config.layout();
  const double lambda = config.beam().wavelength;
  const double period = expected_fringe_period(layout, lambda);
  return PatternVisibility{visibility(profile, central_window(period), envelope, period),
                           first_order_visibility(profile, envelope, layout, lambda)};
}

PatternSummary cmd_pattern(const RunConfig& config, std::optional<double> mask_center) {
  config.validate();
  const auto layout = config.layout();
  const auto beam = config.beam();

  PatternSummary summary;
  summary.profile = simulate_beamline(layout, beam, mask_center, config.grid, options_for(config));
  summary.fractions = fractions_for(config, mask_center);
  summary.state = classify(summary.fractions);
  if (summary.state == SlitState::p12) summary.fringe_period = fringe_spacing(summary.profile);
  summary.visibility = pattern_visibility(config, summary.profile, mask_center);

  const auto dir = output_dir(config);
  write_profile_csv(dir / "profile.csv", summary.profile, config.outputs.profile_range);
  if (config.outputs.image) write_profile_image(dir / "pattern.pgm", summary.profile, config.outputs.profile_range);
  write_text(dir / "metadata.txt", metadata_text(config, "pattern"));

  MetricsBlock block{"pattern", {}};
  block.add("mask_center_m", optional_number(mask_center));
  block.add("wavelength_m", beam.wavelength);
  block.add("state", state_text(summary.state));
  block.add("fraction1", summary.fractions.slit1);
  block.add("fraction2", summary.fractions.slit2);
  block.add("expected_fringe_period_m", expected_fringe_period(layout, beam.wavelength));
  block.add("fringe_period_m", optional_number(summary.fringe_period));
  add_visibility(block, summary.visibility);
  block.add("highest_unblocked_order",
            std::to_string(highest_unblocked_order(layout.mask_opening_width / 2, layout.z_doubleslit_to_mask,
                                                   beam.wavelength, config.slit_separation)));
  const std::vector<MetricsBlock> blocks{block};
  write_text(dir / "metrics.txt", format_metrics(blocks));
  return summary;
}

SweepResult cmd_sweep(const RunConfig& config, std::span<const double> centers) {
  config.validate();
  if (centers.size() < 2) throw ConfigurationError("sweep: need at least two mask centres");
  const auto layout = config.layout();
  const auto beam = config.beam();
  auto sweep = run_sweep(layout, beam, centers, config.grid, options_for(config), config.threads);

  std::vector<std::optional<PatternVisibility>> vis(sweep.entries.size());
  parallel_for(sweep.entries.size(), config.threads, [&](std::size_t i) {
    vis[i] = pattern_visibility(config, sweep.entries[i].profile, sweep.entries[i].mask_center);
  });

  const auto dir = output_dir(config);
  std::string manifest =
      "index,mask_center_m,fraction1,fraction2,state,central_visibility,vis_negative,vis_positive,profile\n";
  for (std::size_t i = 0; i < sweep.entries.size(); ++i) {
    const auto& e = sweep.entries[i];
    const auto name = numbered("profile_", i, 3, ".csv");
    write_profile_csv(dir / name, e.profile, config.outputs.profile_range);
    const auto v = vis[i];
    manifest += std::to_string(i) + "," + format_double(e.mask_center) + "," + format_double(e.fractions.slit1) +
                "," + format_double(e.fractions.slit2) + "," + state_text(e.state) + "," +
                (v ? format_double(v->central) : "none") + "," +
                (v ? format_double(v->first_order.negative) : "none") + "," +
                (v ? format_double(v->first_order.positive) : "none") + "," + name + "\n";
  }
  write_text(dir / "sweep_manifest.csv", manifest);
  write_text(dir / "metadata.txt", metadata_text(config, "sweep"));

  MetricsBlock block{"sweep", {}};
  block.add("entries", std::to_string(sweep.entries.size()));
  std::string sequence;
  for (const auto s : state_sequence(sweep)) sequence += (sequence.empty() ? "" : ",") + state_text(s);
  block.add("state_sequence", sequence);
  const std::vector<MetricsBlock> blocks{block};
  write_text(dir / "metrics.txt", format_metrics(blocks));
  return sweep;
}

BuildupSummary cmd_buildup(const RunConfig& config) {
  config.validate();
  const auto layout = config.layout();
  const auto beam = config.beam();
  const auto& sc = config.sampler;
  const std::uint64_t seed = *sc.seed;

  BuildupSummary summary;
  const auto full = simulate_beamline(layout, beam, config.buildup_mask_center, config.grid, options_for(config));
  if (full.is_zero()) throw ConfigurationError("buildup.mask_center blocks both slits");
  const double half = 0.5 * sc.zoom_orders * expected_fringe_period(layout, beam.wavelength);
  summary.source = cropped(full, -half, half);

  auto& g = summary.geometry;
  g.width = sc.frame_width;
  g.height = sc.frame_height;
  g.pitch = 2.0 * half / double(sc.frame_width - 2 * sc.frame_margin);
  g.x0 = -half - (double(sc.frame_margin) - 0.5) * g.pitch;
  g.y0 = -0.5 * double(sc.frame_height - 1) * g.pitch;

  const double band = 0.5 * layout.magnification * config.slit_height;
  summary.events = generate_events(summary.source, {sc.pattern_rate, sc.events, seed, -band, band});
  const auto& events = summary.events;

  // Exposure windows: one per event (split at the midpoints between
  // arrivals) or fixed-length frames.
  std::vector<std::pair<double, double>> windows;
  if (sc.exposure > 0.0) {
    const double t_last = events.back().t;
    const auto count = std::size_t(std::floor(t_last / sc.exposure)) + 1;
    for (std::size_t k = 0; k < count; ++k) windows.emplace_back(double(k) * sc.exposure, double(k + 1) * sc.exposure);
  } else {
    for (std::size_t i = 0; i < events.size(); ++i) {
      const double lo = i == 0 ? 0.0 : 0.5 * (events[i - 1].t + events[i].t);
      const double hi = i + 1 < events.size() ? 0.5 * (events[i].t + events[i + 1].t) : events[i].t + 0.5 / sc.pattern_rate;
      windows.emplace_back(lo, hi);
    }
  }
  summary.frames = windows.size();

  const RenderSettings render{sc.psf_sigma, sc.spot_amplitude, sc.background};
  const auto scales = config.blob.scales();
  const auto policy = config.blob.policy();
  const std::uint64_t noise_master = derive_seed(seed, Stream::frame_noise);
  std::vector<BlobDetection> detections(windows.size());
  std::vector<Frame> kept(std::min<std::size_t>(config.outputs.frames, windows.size()));
  parallel_for(windows.size(), config.threads, [&](std::size_t k) {
    const auto [t0, t1] = windows[k];
    const auto first = std::lower_bound(events.begin(), events.end(), t0,
                                        [](const DetectionEvent& e, double t) { return e.t < t; });
    const auto last = std::lower_bound(first, events.end(), t1,
                                       [](const DetectionEvent& e, double t) { return e.t < t; });
    auto frame = render_frame(std::span(first, last), t0, t1, g, render, derive_seed(noise_master, k));
    frame.index = k;
    detections[k] = detect_blobs(frame, scales, policy);
    if (k < kept.size()) kept[k] = std::move(frame);
  });

  CanvasSpec canvas{g.width, g.height, 1.0, 0.0, 0.0, config.checkpoints};
  BuildUpAccumulator acc(canvas);
  std::string blob_csv = "frame,t_s,x_px,y_px,scale_t,response\n";
  std::size_t border = 0;
  std::size_t overlap = 0;
  for (std::size_t k = 0; k < detections.size(); ++k) {
    border += detections[k].border_discarded;
    overlap += detections[k].overlap_discarded;
    const double t_mid = 0.5 * (windows[k].first + windows[k].second);
    for (const auto& b : detections[k].blobs) {
      acc.add(b);
      summary.blobs.push_back(b);
      summary.blob_frames.push_back(k);
      blob_csv += std::to_string(k) + "," + format_double(t_mid) + "," + format_double(b.x) + "," +
                  format_double(b.y) + "," + format_double(b.scale_t) + "," + format_double(b.response) + "\n";
    }
  }

  std::vector<double> event_x;
  for (const auto& e : events) event_x.push_back(e.x);
  summary.ks_events = ks_distance(event_x, summary.source);
  std::vector<double> blob_x;
  for (const auto& b : summary.blobs) blob_x.push_back(g.x0 + b.x * g.pitch);
  summary.ks_blobs = blob_x.empty() ? 1.0 : ks_distance(blob_x, summary.source);
  summary.snapshots = acc.snapshots().size();

  const auto dir = output_dir(config);
  std::string event_csv = "index,t_s,x_m,y_m\n";
  for (const auto& e : events)
    event_csv += std::to_string(e.index) + "," + format_double(e.t) + "," + format_double(e.x) + "," +
                 format_double(e.y) + "\n";
  write_text(dir / "events.csv", event_csv);
  write_text(dir / "blobs.csv", blob_csv);
  for (const auto& snap : acc.snapshots()) write_pgm(dir / numbered("buildup_", snap.n_events, 5, ".pgm"), to_image(snap.canvas));
  write_pgm(dir / "buildup_final.pgm", to_image(acc.image().canvas));
  if (!kept.empty()) {
    std::error_code ec;
    fs::create_directories(dir / "frames", ec);
    if (ec) throw IoError((dir / "frames").string() + ": cannot create directory");
    for (const auto& frame : kept) write_pgm(dir / "frames" / numbered("frame_", frame.index, 5, ".pgm"), to_image(frame));
  }
  write_profile_csv(dir / "source_profile.csv", summary.source, 0.0);
  write_text(dir / "metadata.txt", metadata_text(config, "buildup"));

  MetricsBlock block{"buildup", {}};
  block.add("events", std::to_string(events.size()));
  block.add("frames", std::to_string(summary.frames));
  block.add("blobs", std::to_string(summary.blobs.size()));
  block.add("blobs_off_canvas", std::to_string(acc.skipped()));
  block.add("border_discarded", std::to_string(border));
  block.add("overlap_discarded", std::to_string(overlap));
  block.add("ks_events", summary.ks_events);
  block.add("ks_blobs", summary.ks_blobs);
  block.add("ks_critical_99", ks_critical_value_99(events.size()));
  block.add("ks_events_pass", summary.ks_events < ks_critical_value_99(events.size()) ? "true" : "false");
  block.add("pixel_pitch_m", g.pitch);
  block.add("interelectron_distance_m", mean_interelectron_distance(beam.speed, sc.total_rate));
  block.add("snapshots", std::to_string(summary.snapshots));
  MetricsBlock checkpoints{"checkpoints", {}};
  for (const auto c : config.checkpoints) {
    if (c > event_x.size()) break;
    checkpoints.add("ks_events_" + std::to_string(c), ks_distance(std::span(event_x).first(c), summary.source));
  }
  const std::vector<MetricsBlock> blocks{block, checkpoints};
  write_text(dir / "metrics.txt", format_metrics(blocks));
  return summary;
}

DetectSummary cmd_detect(const RunConfig& config, std::span<const fs::path> frames) {
  if (frames.empty()) throw ConfigurationError("detect: no frame files given");
  const auto scales = config.blob.scales();
  const auto policy = config.blob.policy();

  std::vector<BlobDetection> detections;
  for (const auto& path : frames) {
    try {
      detections.push_back(detect_blobs(frame_from_image(read_pgm(path)), scales, policy));
    } catch (const IoError& e) {
      const std::string what = e.what();
      throw IoError(what.starts_with(path.string()) ? what : path.string() + ": " + what);
    }
  }

  const auto dir = output_dir(config);
  DetectSummary summary;
  std::string table = "file,blobs,threshold\n";
  for (std::size_t i = 0; i < frames.size(); ++i) {
    const auto& d = detections[i];
    std::string csv = "x_px,y_px,scale_t,response\n";
    for (const auto& b : d.blobs)
      csv += format_double(b.x) + "," + format_double(b.y) + "," + format_double(b.scale_t) + "," +
             format_double(b.response) + "\n";
    write_text(dir / (frames[i].stem().string() + "_blobs.csv"), csv);
    summary.counts.push_back(d.blobs.size());
    table += frames[i].filename().string() + "," + std::to_string(d.blobs.size()) + "," + format_double(d.threshold) + "\n";
  }
  write_text(dir / "detect_summary.csv", table);
  write_text(dir / "metadata.txt", metadata_text(config, "detect"));

  MetricsBlock block{"detect", {}};
  block.add("files", std::to_string(frames.size()));
  std::size_t total = 0;
  for (const auto c : summary.counts) total += c;
  block.add("blobs", std::to_string(total));
  const std::vector<MetricsBlock> blocks{block};
  write_text(dir / "metrics.txt", format_metrics(blocks));
  return summary;
}

} // namespace dslit
