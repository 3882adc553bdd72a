// Copyright 2026 The envasr Authors.
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

#include "envasr/features.hpp"

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <fstream>
#include <numbers>
#include <stdexcept>
#include <string>

namespace envasr::features {

namespace {

Real hz_to_mel(Real hz) { return 2595.0 * std::log10(1.0 + hz / 700.0); }
Real mel_to_hz(Real mel) { return 700.0 * (std::pow(10.0, mel / 2595.0) - 1.0); }

// kNumMelBins + 2 band edges equally spaced on the mel scale.
std::vector<Real> mel_edges_hz() {
  const Real lo = hz_to_mel(kMelLowHz), hi = hz_to_mel(kMelHighHz);
  std::vector<Real> edges(kNumMelBins + 2);
  for (std::size_t i = 0; i < edges.size(); ++i) {
    edges[i] = mel_to_hz(lo + (hi - lo) * static_cast<Real>(i) / static_cast<Real>(kNumMelBins + 1));
  }
  return edges;
}

// Triangular weights [kNumMelBins x (kFftSize/2 + 1)].
const std::vector<Real>& mel_weights() {
  static const std::vector<Real> weights = [] {
    const std::size_t bins = kFftSize / 2 + 1;
    const auto edges = mel_edges_hz();
    std::vector<Real> w(kNumMelBins * bins, 0.0);
    for (std::size_t m = 0; m < kNumMelBins; ++m) {
      const Real left = edges[m], center = edges[m + 1], right = edges[m + 2];
      for (std::size_t k = 0; k < bins; ++k) {
        const Real f = static_cast<Real>(k) * kSampleRate / static_cast<Real>(kFftSize);
        Real v = 0.0;
        if (f > left && f <= center) {
          v = (f - left) / (center - left);
        } else if (f > center && f < right) {
          v = (right - f) / (right - center);
        }
        w[m * bins + k] = v;
      }
    }
    return w;
  }();
  return weights;
}

const std::vector<Real>& hann_window() {
  static const std::vector<Real> window = [] {
    std::vector<Real> w(kFrameLength);
    for (std::size_t n = 0; n < kFrameLength; ++n) {
      w[n] = 0.5 - 0.5 * std::cos(2.0 * std::numbers::pi * static_cast<Real>(n) /
                                  static_cast<Real>(kFrameLength - 1));
    }
    return w;
  }();
  return window;
}

}  // namespace

void fft(std::vector<std::complex<Real>>& data) {
  const std::size_t n = data.size();
  if (n == 0 || (n & (n - 1)) != 0) throw std::invalid_argument("fft: size must be a power of two");
  for (std::size_t i = 1, j = 0; i < n; ++i) {
    std::size_t bit = n >> 1;
    for (; j & bit; bit >>= 1) j ^= bit;
    j ^= bit;
    if (i < j) std::swap(data[i], data[j]);
  }
  for (std::size_t len = 2; len <= n; len <<= 1) {
    const Real angle = -2.0 * std::numbers::pi / static_cast<Real>(len);
    const std::complex<Real> step(std::cos(angle), std::sin(angle));
    for (std::size_t i = 0; i < n; i += len) {
      std::complex<Real> w(1.0, 0.0);
      for (std::size_t k = 0; k < len / 2; ++k) {
        const auto u = data[i + k];
        const auto v = data[i + k + len / 2] * w;
        data[i + k] = u + v;
        data[i + k + len / 2] = u - v;
        w *= step;
      }
    }
  }
}

std::vector<Real> mel_center_frequencies() {
  const auto edges = mel_edges_hz();
  return {edges.begin() + 1, edges.end() - 1};
}

LfbeFrames compute_lfbe(const AudioWave& wave) {
  if (wave.sample_rate != kSampleRate) {
    throw std::invalid_argument("compute_lfbe: expected 16 kHz audio, got " + std::to_string(wave.sample_rate));
  }
  if (wave.samples.size() < kFrameLength) {
    throw std::invalid_argument("compute_lfbe: wave of " + std::to_string(wave.samples.size()) +
                                " samples is shorter than one frame");
  }
  const std::size_t num_frames = (wave.samples.size() - kFrameLength) / kFrameShift + 1;
  const std::size_t bins = kFftSize / 2 + 1;
  const auto& window = hann_window();
  const auto& weights = mel_weights();

  std::vector<Real> out(num_frames * kNumMelBins);
  std::vector<std::complex<Real>> buf(kFftSize);
  std::vector<Real> power(bins);
  for (std::size_t t = 0; t < num_frames; ++t) {
    std::fill(buf.begin(), buf.end(), std::complex<Real>(0.0, 0.0));
    for (std::size_t n = 0; n < kFrameLength; ++n) buf[n] = wave.samples[t * kFrameShift + n] * window[n];
    fft(buf);
    for (std::size_t k = 0; k < bins; ++k) power[k] = std::norm(buf[k]);
    for (std::size_t m = 0; m < kNumMelBins; ++m) {
      Real energy = 0.0;
      for (std::size_t k = 0; k < bins; ++k) energy += weights[m * bins + k] * power[k];
      out[t * kNumMelBins + m] = std::log(std::max(energy, kLogFloor));
    }
  }
  return {Tensor::from({num_frames, kNumMelBins}, std::move(out))};
}

AudioPatchSeq stack_frames(const LfbeFrames& frames) {
  const std::size_t t = frames.frames.rows();
  if (frames.frames.cols() != kNumMelBins) throw std::invalid_argument("stack_frames: expected 64 coefficients");
  if (t < kStackFrames) {
    throw std::invalid_argument("stack_frames: need at least 3 frames, got " + std::to_string(t));
  }
  const std::size_t n = t / kStackFrames;
  auto in = frames.frames.data();
  // Consecutive frames are contiguous in row-major order, so each patch is
  // a straight copy of three rows.
  std::vector<Real> out(in.begin(), in.begin() + static_cast<std::ptrdiff_t>(n * kAudioPatchDim));
  return {Tensor::from({n, kAudioPatchDim}, std::move(out)), false};
}

Tensor unstack_frames(const AudioPatchSeq& patches) {
  const std::size_t n = patches.patches.rows();
  auto in = patches.patches.data();
  return Tensor::from({n * kStackFrames, kNumMelBins}, {in.begin(), in.end()});
}

Whitener fit_whitener(const Tensor& rows) {
  const std::size_t n = rows.rows(), d = rows.cols();
  if (rows.ndim() != 2 || n < 2) throw std::invalid_argument("fit_whitener: need at least 2 rows");
  Whitener w{std::vector<Real>(d, 0.0), std::vector<Real>(d, 0.0)};
  auto x = rows.data();
  for (std::size_t r = 0; r < n; ++r)
    for (std::size_t c = 0; c < d; ++c) w.mean[c] += x[r * d + c];
  for (auto& m : w.mean) m /= static_cast<Real>(n);
  for (std::size_t r = 0; r < n; ++r)
    for (std::size_t c = 0; c < d; ++c) {
      const Real diff = x[r * d + c] - w.mean[c];
      w.stddev[c] += diff * diff;
    }
  for (auto& s : w.stddev) s = std::max(std::sqrt(s / static_cast<Real>(n)), kStdFloor);
  return w;
}

AudioPatchSeq whiten_clip(const AudioPatchSeq& patches, const Whitener& whitener) {
  const std::size_t d = patches.patches.cols();
  if (whitener.mean.size() != d || whitener.stddev.size() != d) {
    throw std::invalid_argument("whiten_clip: whitener has " + std::to_string(whitener.mean.size()) +
                                " dims, patches have " + std::to_string(d));
  }
  auto in = patches.patches.data();
  std::vector<Real> out(in.size());
  for (std::size_t i = 0; i < in.size(); ++i) {
    const std::size_t c = i % d;
    out[i] = std::clamp((in[i] - whitener.mean[c]) / whitener.stddev[c], -kClipBound, kClipBound);
  }
  return {Tensor::from(patches.patches.shape(), std::move(out)), true};
}

Tensor whitener_to_tensor(const Whitener& whitener) {
  std::vector<Real> values(whitener.mean);
  values.insert(values.end(), whitener.stddev.begin(), whitener.stddev.end());
  return Tensor::from({2, whitener.mean.size()}, std::move(values));
}

Whitener whitener_from_tensor(const Tensor& tensor) {
  if (tensor.ndim() != 2 || tensor.rows() != 2) throw std::invalid_argument("whitener tensor must be [2 x D]");
  Whitener w{tensor.row(0), tensor.row(1)};
  for (Real s : w.stddev) {
    if (!(s > 0.0)) throw std::invalid_argument("whitener std must be positive");
  }
  return w;
}

AudioWave resample(const AudioWave& wave, int target_rate) {
  if (wave.sample_rate <= 0 || target_rate <= 0) throw std::invalid_argument("resample: rates must be positive");
  if (wave.sample_rate == target_rate || wave.samples.empty()) return {wave.samples, target_rate};
  const Real ratio = static_cast<Real>(wave.sample_rate) / static_cast<Real>(target_rate);
  const auto out_len = static_cast<std::size_t>(
      std::floor(static_cast<Real>(wave.samples.size() - 1) / ratio)) + 1;
  AudioWave out{std::vector<Real>(out_len), target_rate};
  for (std::size_t i = 0; i < out_len; ++i) {
    const Real pos = static_cast<Real>(i) * ratio;
    const auto lo = static_cast<std::size_t>(pos);
    const std::size_t hi = std::min(lo + 1, wave.samples.size() - 1);
    const Real frac = pos - static_cast<Real>(lo);
    out.samples[i] = wave.samples[lo] * (1.0 - frac) + wave.samples[hi] * frac;
  }
  return out;
}

namespace {

std::uint32_t read_u32(const std::string& b, std::size_t at) {
  return static_cast<std::uint32_t>(static_cast<unsigned char>(b[at])) |
         static_cast<std::uint32_t>(static_cast<unsigned char>(b[at + 1])) << 8 |
         static_cast<std::uint32_t>(static_cast<unsigned char>(b[at + 2])) << 16 |
         static_cast<std::uint32_t>(static_cast<unsigned char>(b[at + 3])) << 24;
}

std::uint16_t read_u16(const std::string& b, std::size_t at) {
  return static_cast<std::uint16_t>(static_cast<unsigned char>(b[at]) |
                                    static_cast<unsigned char>(b[at + 1]) << 8);
}

void put_u32(std::string& out, std::uint32_t v) {
  for (int i = 0; i < 4; ++i) out.push_back(static_cast<char>((v >> (8 * i)) & 0xff));
}

void put_u16(std::string& out, std::uint16_t v) {
  out.push_back(static_cast<char>(v & 0xff));
  out.push_back(static_cast<char>(v >> 8));
}

}  // namespace

AudioWave read_wav(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open " + path.string());
  std::string bytes((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  if (bytes.size() < 12 || bytes.compare(0, 4, "RIFF") != 0 || bytes.compare(8, 4, "WAVE") != 0) {
    throw std::runtime_error(path.string() + ": not a RIFF/WAVE file");
  }
  int rate = 0;
  bool have_fmt = false;
  std::size_t pos = 12;
  while (pos + 8 <= bytes.size()) {
    const std::string id = bytes.substr(pos, 4);
    const std::uint32_t len = read_u32(bytes, pos + 4);
    const std::size_t body = pos + 8;
    if (body + len > bytes.size()) throw std::runtime_error(path.string() + ": truncated chunk '" + id + "'");
    if (id == "fmt ") {
      if (len < 16) throw std::runtime_error(path.string() + ": short fmt chunk");
      const auto format = read_u16(bytes, body);
      const auto channels = read_u16(bytes, body + 2);
      rate = static_cast<int>(read_u32(bytes, body + 4));
      const auto bits = read_u16(bytes, body + 14);
      if (format != 1 || channels != 1 || bits != 16) {
        throw std::runtime_error(path.string() + ": only PCM16 mono is supported");
      }
      have_fmt = true;
    } else if (id == "data") {
      if (!have_fmt) throw std::runtime_error(path.string() + ": data chunk before fmt chunk");
      AudioWave wave{std::vector<Real>(len / 2), rate};
      for (std::size_t i = 0; i < wave.samples.size(); ++i) {
        wave.samples[i] = static_cast<std::int16_t>(read_u16(bytes, body + 2 * i)) / 32768.0;
      }
      return rate == kSampleRate ? wave : resample(wave, kSampleRate);
    }
    pos = body + len + (len & 1);
  }
  throw std::runtime_error(path.string() + ": no data chunk");
}

void write_wav(const std::filesystem::path& path, const AudioWave& wave) {
  const auto data_len = static_cast<std::uint32_t>(wave.samples.size() * 2);
  std::string out = "RIFF";
  put_u32(out, 36 + data_len);
  out += "WAVEfmt ";
  put_u32(out, 16);
  put_u16(out, 1);
  put_u16(out, 1);
  put_u32(out, static_cast<std::uint32_t>(wave.sample_rate));
  put_u32(out, static_cast<std::uint32_t>(wave.sample_rate * 2));
  put_u16(out, 2);
  put_u16(out, 16);
  out += "data";
  put_u32(out, data_len);
  for (Real s : wave.samples) {
    const auto q = static_cast<std::int16_t>(std::lround(std::clamp(s, -1.0, 32767.0 / 32768.0) * 32768.0));
    put_u16(out, static_cast<std::uint16_t>(q));
  }
  std::ofstream f(path, std::ios::binary);
  if (!f) throw std::runtime_error("cannot write " + path.string());
  f.write(out.data(), static_cast<std::streamsize>(out.size()));
}

namespace {

void require_clip(const VideoClip& clip) {
  if (clip.pixels.ndim() != 4 || clip.pixels.dim(3) != kVideoChannels) {
    throw std::invalid_argument("video clip must be [F x H x W x 3], got " + shape_str(clip.pixels.shape()));
  }
}

}  // namespace

VideoClip reduce_frame_rate(const VideoClip& clip, Real target_fps) {
  require_clip(clip);
  if (target_fps <= 0 || clip.frame_rate <= 0) throw std::invalid_argument("frame rates must be positive");
  if (target_fps >= clip.frame_rate) return clip;
  const std::size_t f = clip.num_frames(), frame = clip.height() * clip.width() * kVideoChannels;
  const Real ratio = clip.frame_rate / target_fps;
  const auto out_f = static_cast<std::size_t>(std::floor(static_cast<Real>(f) / ratio));
  auto in = clip.pixels.data();
  std::vector<Real> out;
  out.reserve(out_f * frame);
  for (std::size_t i = 0; i < out_f; ++i) {
    const std::size_t src = std::min(f - 1, static_cast<std::size_t>(std::lround(static_cast<Real>(i) * ratio)));
    out.insert(out.end(), in.begin() + static_cast<std::ptrdiff_t>(src * frame),
               in.begin() + static_cast<std::ptrdiff_t>((src + 1) * frame));
  }
  return {Tensor::from({out_f, clip.height(), clip.width(), kVideoChannels}, std::move(out)), target_fps};
}

VideoClip center_crop_resize(const VideoClip& clip, std::size_t size) {
  require_clip(clip);
  const std::size_t f = clip.num_frames(), h = clip.height(), w = clip.width();
  if (h == 0 || w == 0 || size == 0) throw std::invalid_argument("center_crop_resize: empty frame");
  const Real scale = static_cast<Real>(size) / static_cast<Real>(std::min(h, w));
  const auto rh = std::max(size, static_cast<std::size_t>(std::lround(static_cast<Real>(h) * scale)));
  const auto rw = std::max(size, static_cast<std::size_t>(std::lround(static_cast<Real>(w) * scale)));
  const std::size_t top = (rh - size) / 2, left = (rw - size) / 2;
  auto in = clip.pixels.data();
  std::vector<Real> out(f * size * size * kVideoChannels);
  for (std::size_t t = 0; t < f; ++t) {
    for (std::size_t y = 0; y < size; ++y) {
      // Sample position in source coordinates (pixel centers aligned).
      const Real sy = std::clamp((static_cast<Real>(y + top) + 0.5) * static_cast<Real>(h) / static_cast<Real>(rh) - 0.5,
                                 0.0, static_cast<Real>(h - 1));
      const auto y0 = static_cast<std::size_t>(sy);
      const std::size_t y1 = std::min(y0 + 1, h - 1);
      const Real fy = sy - static_cast<Real>(y0);
      for (std::size_t x = 0; x < size; ++x) {
        const Real sx =
            std::clamp((static_cast<Real>(x + left) + 0.5) * static_cast<Real>(w) / static_cast<Real>(rw) - 0.5, 0.0,
                       static_cast<Real>(w - 1));
        const auto x0 = static_cast<std::size_t>(sx);
        const std::size_t x1 = std::min(x0 + 1, w - 1);
        const Real fx = sx - static_cast<Real>(x0);
        for (std::size_t c = 0; c < kVideoChannels; ++c) {
          auto px = [&](std::size_t yy, std::size_t xx) { return in[((t * h + yy) * w + xx) * kVideoChannels + c]; };
          const Real top_v = px(y0, x0) * (1 - fx) + px(y0, x1) * fx;
          const Real bot_v = px(y1, x0) * (1 - fx) + px(y1, x1) * fx;
          out[((t * size + y) * size + x) * kVideoChannels + c] = top_v * (1 - fy) + bot_v * fy;
        }
      }
    }
  }
  return {Tensor::from({f, size, size, kVideoChannels}, std::move(out)), clip.frame_rate};
}

VideoClip truncate_frames(const VideoClip& clip) {
  require_clip(clip);
  const std::size_t keep = clip.num_frames() / kTubeletFrames * kTubeletFrames;
  const std::size_t frame = clip.height() * clip.width() * kVideoChannels;
  auto in = clip.pixels.data();
  return {Tensor::from({keep, clip.height(), clip.width(), kVideoChannels},
                       {in.begin(), in.begin() + static_cast<std::ptrdiff_t>(keep * frame)}),
          clip.frame_rate};
}

VideoPatchSeq extract_video_patches(const VideoClip& clip) {
  require_clip(clip);
  const std::size_t f = clip.num_frames(), h = clip.height(), w = clip.width();
  if (f == 0 || f % kTubeletFrames != 0) {
    throw std::invalid_argument("extract_video_patches: frame count " + std::to_string(f) +
                                " is not a positive multiple of 3");
  }
  if (h == 0 || w == 0 || h % kVideoPatchSize != 0 || w % kVideoPatchSize != 0) {
    throw std::invalid_argument("extract_video_patches: frame size " + std::to_string(h) + "x" + std::to_string(w) +
                                " is not a multiple of 16");
  }
  VideoGrid grid{f / kTubeletFrames, h / kVideoPatchSize, w / kVideoPatchSize};
  auto in = clip.pixels.data();
  std::vector<Real> out;
  out.reserve(grid.size() * kVideoPatchDim);
  constexpr std::size_t row_len = kVideoPatchSize * kVideoChannels;
  for (std::size_t ts = 0; ts < grid.time_steps; ++ts)
    for (std::size_t r = 0; r < grid.rows; ++r)
      for (std::size_t c = 0; c < grid.cols; ++c)
        for (std::size_t dt = 0; dt < kTubeletFrames; ++dt)
          for (std::size_t y = 0; y < kVideoPatchSize; ++y) {
            const std::size_t src =
                (((ts * kTubeletFrames + dt) * h + r * kVideoPatchSize + y) * w + c * kVideoPatchSize) * kVideoChannels;
            out.insert(out.end(), in.begin() + static_cast<std::ptrdiff_t>(src),
                       in.begin() + static_cast<std::ptrdiff_t>(src + row_len));
          }
  return {Tensor::from({grid.size(), kVideoPatchDim}, std::move(out)), grid};
}

}  // namespace envasr::features
