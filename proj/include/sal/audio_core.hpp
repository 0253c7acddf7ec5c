// Copyright 2026 The SAL Authors. All Rights Reserved.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.
//
// Core audio containers and file formats: multi-channel clips, source
// trajectories, alignment labels, dataset manifests, and WAV / JSON I/O.
//
// Sign and layout conventions used throughout the library:
//   - Stereo scenes: azimuth in [-pi/2, pi/2], positive azimuth is the
//     listener's RIGHT. Positive itd / ild / led all mean "right ear first /
//     right ear louder".
//   - FOA scenes: ACN channel order (w, y, z, x) with SN3D scaling. Azimuth
//     in [-pi, pi), measured counterclockwise from +x, so an encoded source
//     at positive azimuth drives the y channel positively.
//   - Audio is 16 kHz everywhere; files at other rates are rejected.

#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <optional>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include "json.hpp"

namespace sal {

inline constexpr double kPi = 3.141592653589793238462643383279502884;
inline constexpr int kDefaultSampleRate = 16000;

enum class Layout { kMono = 1, kStereo = 2, kFoa = 4 };

inline int channel_count(Layout layout) { return static_cast<int>(layout); }

inline Layout layout_from_channels(int channels) {
  switch (channels) {
    case 1: return Layout::kMono;
    case 2: return Layout::kStereo;
    case 4: return Layout::kFoa;
    default:
      throw std::invalid_argument("unsupported channel count: " +
                                  std::to_string(channels));
  }
}

inline std::string layout_name(Layout layout) {
  switch (layout) {
    case Layout::kMono: return "mono";
    case Layout::kStereo: return "stereo";
    case Layout::kFoa: return "foa";
  }
  return "?";
}

// Multi-channel sample buffer. Samples are stored as doubles so that sums
// and transforms stay exact; the canonical on-disk format is float32 WAV.
struct AudioClip {
  std::vector<std::vector<double>> samples;  // [channel][n]
  int sample_rate_hz = kDefaultSampleRate;
  Layout layout = Layout::kMono;

  int num_channels() const { return static_cast<int>(samples.size()); }
  std::size_t num_samples() const {
    return samples.empty() ? 0 : samples[0].size();
  }
  double duration_s() const {
    return static_cast<double>(num_samples()) / sample_rate_hz;
  }

  void validate() const {
    if (sample_rate_hz <= 0)
      throw std::invalid_argument("sample_rate_hz must be positive");
    if (num_channels() != channel_count(layout))
      throw std::invalid_argument("channel count does not match layout");
    for (const auto& ch : samples) {
      if (ch.size() != num_samples())
        throw std::invalid_argument("channel lengths differ");
      for (double v : ch)
        if (!std::isfinite(v))
          throw std::invalid_argument("non-finite sample");
    }
  }

  static AudioClip zeros(Layout layout, std::size_t n,
                         int rate = kDefaultSampleRate) {
    AudioClip clip;
    clip.layout = layout;
    clip.sample_rate_hz = rate;
    clip.samples.assign(channel_count(layout), std::vector<double>(n, 0.0));
    return clip;
  }
};

inline double peak_abs(const AudioClip& clip) {
  double peak = 0.0;
  for (const auto& ch : clip.samples)
    for (double v : ch) peak = std::max(peak, std::fabs(v));
  return peak;
}

// Time-stamped source azimuth/elevation track, sampled on a 6 Hz grid by the
// scene generator. Stands in for the visual stream: it carries exactly the
// positional information an ideal tracker would extract.
struct SourceTrajectory {
  std::vector<double> times_s;
  std::vector<double> azimuth_rad;
  std::vector<double> elevation_rad;

  std::size_t size() const { return times_s.size(); }

  void validate() const {
    if (azimuth_rad.size() != times_s.size() ||
        elevation_rad.size() != times_s.size())
      throw std::invalid_argument("trajectory arrays must have equal length");
    for (std::size_t i = 1; i < times_s.size(); ++i)
      if (!(times_s[i] > times_s[i - 1]))
        throw std::invalid_argument("trajectory times must be strictly ascending");
    for (double a : azimuth_rad)
      if (!std::isfinite(a)) throw std::invalid_argument("non-finite azimuth");
  }

  bool covers(double t0, double t1) const {
    return !times_s.empty() && times_s.front() <= t0 + 1e-9 &&
           times_s.back() >= t1 - 1e-9;
  }

  // Linear interpolation, clamped at the ends.
  double azimuth_at(double t) const {
    return interp(azimuth_rad, t);
  }
  double elevation_at(double t) const { return interp(elevation_rad, t); }

 private:
  double interp(const std::vector<double>& values, double t) const {
    if (times_s.empty()) throw std::invalid_argument("empty trajectory");
    if (t <= times_s.front()) return values.front();
    if (t >= times_s.back()) return values.back();
    auto it = std::upper_bound(times_s.begin(), times_s.end(), t);
    std::size_t i = static_cast<std::size_t>(it - times_s.begin());
    double t0 = times_s[i - 1], t1 = times_s[i];
    double u = (t - t0) / (t1 - t0);
    return values[i - 1] * (1.0 - u) + values[i] * u;
  }
};

// Wraps an angle into [-pi, pi). In-range values pass through untouched so
// that negation stays an exact involution.
inline double wrap_pi(double a) {
  if (a >= -kPi && a < kPi) return a;
  a = std::fmod(a + kPi, 2.0 * kPi);
  if (a < 0) a += 2.0 * kPi;
  return a - kPi;
}

// Wraps an angle into [0, 2*pi).
inline double wrap_two_pi(double a) {
  if (a >= 0.0 && a < 2.0 * kPi) return a;
  a = std::fmod(a, 2.0 * kPi);
  if (a < 0) a += 2.0 * kPi;
  return a;
}

enum class Misalignment { kNone, kChannelFlip, kRotation };

// y = 1 means the pair is spatially aligned; y = 0 means the audio was
// transformed (channel flip for stereo, z-rotation for FOA).
struct AlignmentLabel {
  bool aligned = true;
  Misalignment misalignment = Misalignment::kNone;
  double rotation_rad = 0.0;  // meaningful only for kRotation

  void validate() const {
    if (aligned != (misalignment == Misalignment::kNone))
      throw std::invalid_argument("aligned flag inconsistent with misalignment");
  }

  static AlignmentLabel make_aligned() { return AlignmentLabel{}; }
  static AlignmentLabel flipped() {
    return AlignmentLabel{false, Misalignment::kChannelFlip, 0.0};
  }
  static AlignmentLabel rotated(double theta_rad) {
    return AlignmentLabel{false, Misalignment::kRotation,
                          wrap_two_pi(theta_rad)};
  }
};

enum class Split { kTrain, kVal, kTest };

inline std::string split_name(Split s) {
  switch (s) {
    case Split::kTrain: return "train";
    case Split::kVal: return "val";
    case Split::kTest: return "test";
  }
  return "?";
}

inline Split split_from_name(const std::string& s) {
  if (s == "train") return Split::kTrain;
  if (s == "val") return Split::kVal;
  if (s == "test") return Split::kTest;
  throw std::invalid_argument("unknown split: " + s);
}

struct ManifestEntry {
  std::string id;
  std::string audio_path;       // relative to the manifest's directory
  std::string trajectory_path;  // relative to the manifest's directory
  AlignmentLabel label;
  std::uint64_t scene_seed = 0;
  Split split = Split::kTrain;
};

struct DatasetManifest {
  int version = 1;
  std::vector<ManifestEntry> entries;
  // Directory the manifest was loaded from / saved to; not serialized.
  std::string root_dir;

  std::vector<const ManifestEntry*> split_entries(Split s) const {
    std::vector<const ManifestEntry*> out;
    for (const auto& e : entries)
      if (e.split == s) out.push_back(&e);
    return out;
  }

  std::string resolve(const std::string& relative) const {
    if (root_dir.empty()) return relative;
    return (std::filesystem::path(root_dir) / relative).string();
  }
};

// ---------------------------------------------------------------------------
// WAV I/O (RIFF; PCM16 import, float32 canonical)
// ---------------------------------------------------------------------------

enum class WavEncoding { kPcm16, kFloat32 };

namespace detail {

inline void put_u32(std::string& out, std::uint32_t v) {
  out.push_back(static_cast<char>(v & 0xff));
  out.push_back(static_cast<char>((v >> 8) & 0xff));
  out.push_back(static_cast<char>((v >> 16) & 0xff));
  out.push_back(static_cast<char>((v >> 24) & 0xff));
}

inline void put_u16(std::string& out, std::uint16_t v) {
  out.push_back(static_cast<char>(v & 0xff));
  out.push_back(static_cast<char>((v >> 8) & 0xff));
}

struct ByteReader {
  const std::string& data;
  std::size_t pos = 0;

  bool has(std::size_t n) const { return pos + n <= data.size(); }
  void need(std::size_t n) const {
    if (pos + n > data.size()) throw std::runtime_error("truncated WAV file");
  }
  std::uint32_t u32() {
    need(4);
    std::uint32_t v = 0;
    std::memcpy(&v, data.data() + pos, 4);
    pos += 4;
    return v;
  }
  std::uint16_t u16() {
    need(2);
    std::uint16_t v = 0;
    std::memcpy(&v, data.data() + pos, 2);
    pos += 2;
    return v;
  }
  std::string tag() {
    need(4);
    std::string t = data.substr(pos, 4);
    pos += 4;
    return t;
  }
  void skip(std::size_t n) {
    need(n);
    pos += n;
  }
};

}  // namespace detail

struct WavInfo {
  int channels = 0;
  int sample_rate_hz = 0;
  WavEncoding encoding = WavEncoding::kFloat32;
  std::size_t num_frames = 0;
};

namespace detail {

inline std::string read_file_bytes(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open file: " + path);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

inline void write_file_bytes(const std::string& path, const std::string& bytes) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw std::runtime_error("cannot open file for writing: " + path);
  out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
  if (!out) throw std::runtime_error("write failed: " + path);
}

// Parses the RIFF structure and returns the format plus raw data bytes.
inline WavInfo parse_wav(const std::string& bytes, std::string* data_out) {
  detail::ByteReader r{bytes};
  if (r.tag() != "RIFF") throw std::runtime_error("not a RIFF file");
  r.u32();  // riff size; trust the chunk walk instead
  if (r.tag() != "WAVE") throw std::runtime_error("not a WAVE file");

  WavInfo info;
  bool have_fmt = false, have_data = false;
  std::uint16_t format_code = 0, bits = 0;
  while (r.has(8)) {
    std::string tag = r.tag();
    std::uint32_t size = r.u32();
    if (tag == "fmt ") {
      if (size < 16) throw std::runtime_error("malformed fmt chunk");
      format_code = r.u16();
      info.channels = r.u16();
      info.sample_rate_hz = static_cast<int>(r.u32());
      r.u32();  // byte rate
      r.u16();  // block align
      bits = r.u16();
      r.skip(size - 16);
      have_fmt = true;
    } else if (tag == "data") {
      r.need(size);
      if (data_out) *data_out = bytes.substr(r.pos, size);
      r.skip(size);
      have_data = true;
    } else {
      r.skip(size);
    }
    if (size % 2 == 1 && r.has(1)) r.skip(1);  // chunks are word-aligned
  }
  if (!have_fmt || !have_data)
    throw std::runtime_error("missing fmt or data chunk");

  if (format_code == 1 && bits == 16) {
    info.encoding = WavEncoding::kPcm16;
  } else if (format_code == 3 && bits == 32) {
    info.encoding = WavEncoding::kFloat32;
  } else {
    throw std::runtime_error("unsupported WAV encoding (format " +
                             std::to_string(format_code) + ", " +
                             std::to_string(bits) + " bit)");
  }
  if (info.channels <= 0) throw std::runtime_error("malformed channel count");
  return info;
}

}  // namespace detail

// Reads the header only; used by manifest validation.
inline WavInfo read_wav_info(const std::string& path) {
  std::string data;
  WavInfo info = detail::parse_wav(detail::read_file_bytes(path), &data);
  int bytes_per = info.encoding == WavEncoding::kPcm16 ? 2 : 4;
  info.num_frames = data.size() / (static_cast<std::size_t>(bytes_per) *
                                   static_cast<std::size_t>(info.channels));
  return info;
}

// Reads a PCM16 or float32 WAV file. PCM16 samples are normalized by 1/32768.
// Layout is inferred from the channel count; counts outside {1, 2, 4} fail.
inline AudioClip read_wav(const std::string& path) {
  std::string data;
  WavInfo info = detail::parse_wav(detail::read_file_bytes(path), &data);
  Layout layout = layout_from_channels(info.channels);

  int bytes_per = info.encoding == WavEncoding::kPcm16 ? 2 : 4;
  std::size_t frame_bytes =
      static_cast<std::size_t>(bytes_per) * static_cast<std::size_t>(info.channels);
  if (frame_bytes != 0 && data.size() % frame_bytes != 0)
    throw std::runtime_error("truncated WAV data chunk");
  std::size_t n = frame_bytes == 0 ? 0 : data.size() / frame_bytes;

  AudioClip clip = AudioClip::zeros(layout, n, info.sample_rate_hz);
  const char* p = data.data();
  if (info.encoding == WavEncoding::kPcm16) {
    for (std::size_t i = 0; i < n; ++i)
      for (int c = 0; c < info.channels; ++c) {
        std::int16_t v = 0;
        std::memcpy(&v, p + (i * info.channels + c) * 2, 2);
        clip.samples[c][i] = static_cast<double>(v) / 32768.0;
      }
  } else {
    for (std::size_t i = 0; i < n; ++i)
      for (int c = 0; c < info.channels; ++c) {
        float v = 0;
        std::memcpy(&v, p + (i * info.channels + c) * 4, 4);
        clip.samples[c][i] = static_cast<double>(v);
      }
  }
  return clip;
}

// Writes a WAV file. Returns the number of samples clamped (PCM16 only;
// float32 writes values as-is). Float32 is the canonical format: a clip whose
// samples are float32-representable round-trips bit-exactly.
inline std::size_t write_wav(const AudioClip& clip, const std::string& path,
                             WavEncoding encoding = WavEncoding::kFloat32) {
  clip.validate();
  int channels = clip.num_channels();
  std::size_t n = clip.num_samples();
  int bytes_per = encoding == WavEncoding::kPcm16 ? 2 : 4;
  std::uint32_t data_size =
      static_cast<std::uint32_t>(n * static_cast<std::size_t>(channels) * bytes_per);

  std::string out;
  out.reserve(64 + data_size);
  out += "RIFF";
  bool fact = encoding == WavEncoding::kFloat32;
  std::uint32_t riff_size = 4 + (8 + 16) + (fact ? 12 : 0) + (8 + data_size);
  detail::put_u32(out, riff_size);
  out += "WAVE";
  out += "fmt ";
  detail::put_u32(out, 16);
  detail::put_u16(out, encoding == WavEncoding::kPcm16 ? 1 : 3);
  detail::put_u16(out, static_cast<std::uint16_t>(channels));
  detail::put_u32(out, static_cast<std::uint32_t>(clip.sample_rate_hz));
  detail::put_u32(out, static_cast<std::uint32_t>(clip.sample_rate_hz * channels *
                                                  bytes_per));
  detail::put_u16(out, static_cast<std::uint16_t>(channels * bytes_per));
  detail::put_u16(out, static_cast<std::uint16_t>(bytes_per * 8));
  if (fact) {
    out += "fact";
    detail::put_u32(out, 4);
    detail::put_u32(out, static_cast<std::uint32_t>(n));
  }
  out += "data";
  detail::put_u32(out, data_size);

  std::size_t clamped = 0;
  if (encoding == WavEncoding::kPcm16) {
    for (std::size_t i = 0; i < n; ++i)
      for (int c = 0; c < channels; ++c) {
        double v = clip.samples[c][i];
        if (v > 1.0 || v < -1.0) ++clamped;
        long q = std::lround(std::clamp(v, -1.0, 1.0) * 32768.0);
        std::int16_t s =
            static_cast<std::int16_t>(std::clamp<long>(q, -32768, 32767));
        char b[2];
        std::memcpy(b, &s, 2);
        out.append(b, 2);
      }
  } else {
    for (std::size_t i = 0; i < n; ++i)
      for (int c = 0; c < channels; ++c) {
        float v = static_cast<float>(clip.samples[c][i]);
        char b[4];
        std::memcpy(b, &v, 4);
        out.append(b, 4);
      }
  }
  detail::write_file_bytes(path, out);
  return clamped;
}

// ---------------------------------------------------------------------------
// Trajectory JSON
// ---------------------------------------------------------------------------

inline nlohmann::json to_json(const SourceTrajectory& traj) {
  return nlohmann::json{{"times_s", traj.times_s},
                        {"azimuth_rad", traj.azimuth_rad},
                        {"elevation_rad", traj.elevation_rad}};
}

inline SourceTrajectory trajectory_from_json(const nlohmann::json& j) {
  SourceTrajectory traj;
  traj.times_s = j.at("times_s").get<std::vector<double>>();
  traj.azimuth_rad = j.at("azimuth_rad").get<std::vector<double>>();
  traj.elevation_rad = j.at("elevation_rad").get<std::vector<double>>();
  traj.validate();
  return traj;
}

inline void write_json_file(const std::string& path, const nlohmann::json& j) {
  detail::write_file_bytes(path, j.dump(2) + "\n");
}

inline nlohmann::json read_json_file(const std::string& path) {
  return nlohmann::json::parse(detail::read_file_bytes(path));
}

inline void write_trajectory(const SourceTrajectory& traj,
                             const std::string& path) {
  traj.validate();
  write_json_file(path, to_json(traj));
}

inline SourceTrajectory read_trajectory(const std::string& path) {
  return trajectory_from_json(read_json_file(path));
}

// ---------------------------------------------------------------------------
// Manifest JSON
// ---------------------------------------------------------------------------

inline nlohmann::json label_to_json(const AlignmentLabel& label) {
  nlohmann::json j;
  j["aligned"] = label.aligned;
  switch (label.misalignment) {
    case Misalignment::kNone: j["misalignment"] = "none"; break;
    case Misalignment::kChannelFlip: j["misalignment"] = "flip"; break;
    case Misalignment::kRotation:
      j["misalignment"] = nlohmann::json{{"rotation_rad", label.rotation_rad}};
      break;
  }
  return j;
}

inline AlignmentLabel label_from_json(const nlohmann::json& j) {
  AlignmentLabel label;
  label.aligned = j.at("aligned").get<bool>();
  const auto& m = j.at("misalignment");
  if (m.is_string()) {
    std::string s = m.get<std::string>();
    if (s == "none") {
      label.misalignment = Misalignment::kNone;
    } else if (s == "flip") {
      label.misalignment = Misalignment::kChannelFlip;
    } else {
      throw std::invalid_argument("unknown misalignment: " + s);
    }
  } else if (m.is_object() && m.contains("rotation_rad")) {
    label.misalignment = Misalignment::kRotation;
    label.rotation_rad = m.at("rotation_rad").get<double>();
  } else {
    throw std::invalid_argument("malformed misalignment field");
  }
  label.validate();
  return label;
}

inline void save_manifest(const DatasetManifest& manifest,
                          const std::string& path) {
  nlohmann::json entries = nlohmann::json::array();
  for (const auto& e : manifest.entries) {
    entries.push_back(nlohmann::json{{"id", e.id},
                                     {"audio_path", e.audio_path},
                                     {"trajectory_path", e.trajectory_path},
                                     {"label", label_to_json(e.label)},
                                     {"scene_seed", e.scene_seed},
                                     {"split", split_name(e.split)}});
  }
  write_json_file(path,
                  nlohmann::json{{"version", manifest.version},
                                 {"entries", entries}});
}

// Loads and validates a manifest: unique ids, existing 16 kHz files, and
// label/layout consistency (a rotation label requires FOA audio, a channel
// flip requires stereo).
inline DatasetManifest load_manifest(const std::string& path,
                                     bool check_files = true) {
  nlohmann::json j = read_json_file(path);
  DatasetManifest manifest;
  manifest.version = j.at("version").get<int>();
  manifest.root_dir = std::filesystem::path(path).parent_path().string();
  for (const auto& je : j.at("entries")) {
    ManifestEntry e;
    e.id = je.at("id").get<std::string>();
    e.audio_path = je.at("audio_path").get<std::string>();
    e.trajectory_path = je.at("trajectory_path").get<std::string>();
    e.label = label_from_json(je.at("label"));
    e.scene_seed = je.at("scene_seed").get<std::uint64_t>();
    e.split = split_from_name(je.at("split").get<std::string>());
    manifest.entries.push_back(std::move(e));
  }

  std::vector<std::string> ids;
  ids.reserve(manifest.entries.size());
  for (const auto& e : manifest.entries) ids.push_back(e.id);
  std::sort(ids.begin(), ids.end());
  auto dup = std::adjacent_find(ids.begin(), ids.end());
  if (dup != ids.end())
    throw std::invalid_argument("duplicate manifest id: " + *dup);

  if (check_files) {
    for (const auto& e : manifest.entries) {
      std::string audio = manifest.resolve(e.audio_path);
      std::string traj = manifest.resolve(e.trajectory_path);
      if (!std::filesystem::exists(audio))
        throw std::invalid_argument("missing audio file: " + audio);
      if (!std::filesystem::exists(traj))
        throw std::invalid_argument("missing trajectory file: " + traj);
      WavInfo info = read_wav_info(audio);
      if (info.sample_rate_hz != kDefaultSampleRate)
        throw std::invalid_argument("unsupported sample rate in " + audio);
      Layout layout = layout_from_channels(info.channels);
      if (e.label.misalignment == Misalignment::kRotation &&
          layout != Layout::kFoa)
        throw std::invalid_argument("rotation label on non-FOA clip: " + e.id);
      if (e.label.misalignment == Misalignment::kChannelFlip &&
          layout != Layout::kStereo)
        throw std::invalid_argument("flip label on non-stereo clip: " + e.id);
    }
  }
  return manifest;
}

struct SceneData {
  AudioClip audio;
  SourceTrajectory trajectory;
};

inline SceneData load_entry(const DatasetManifest& manifest,
                            const ManifestEntry& entry) {
  SceneData data;
  data.audio = read_wav(manifest.resolve(entry.audio_path));
  data.trajectory = read_trajectory(manifest.resolve(entry.trajectory_path));
  return data;
}

}  // namespace sal
