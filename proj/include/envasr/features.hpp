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

#pragma once

#include <complex>
#include <cstddef>
#include <filesystem>
#include <vector>

#include "envasr/tensor.hpp"

// Audio and video front end: log mel filterbank energies, 3-frame audio
// patches with global whitening and clipping, and 3x16x16 video tubelets.
namespace envasr::features {

inline constexpr int kSampleRate = 16000;
inline constexpr std::size_t kFrameLength = 400;  // 25 ms
inline constexpr std::size_t kFrameShift = 160;   // 10 ms
inline constexpr std::size_t kFftSize = 512;
inline constexpr std::size_t kNumMelBins = 64;
inline constexpr Real kMelLowHz = 0.0;
inline constexpr Real kMelHighHz = 8000.0;
inline constexpr Real kLogFloor = 1e-10;

inline constexpr std::size_t kStackFrames = 3;
inline constexpr std::size_t kAudioPatchDim = kStackFrames * kNumMelBins;  // 192
inline constexpr Real kClipBound = 1.2;
inline constexpr Real kStdFloor = 1e-6;

inline constexpr std::size_t kTubeletFrames = 3;
inline constexpr std::size_t kVideoPatchSize = 16;
inline constexpr std::size_t kVideoChannels = 3;
inline constexpr std::size_t kVideoPatchDim = kTubeletFrames * kVideoPatchSize * kVideoPatchSize * kVideoChannels;
inline constexpr std::size_t kVideoFrameSize = 256;
inline constexpr Real kVideoFrameRate = 6.0;

struct AudioWave {
  std::vector<Real> samples;
  int sample_rate = kSampleRate;
};

struct LfbeFrames {
  Tensor frames;  // [T x 64]
  Real frame_shift_ms = 10.0;
  Real frame_length_ms = 25.0;
};

struct AudioPatchSeq {
  Tensor patches;  // [T' x 192]
  bool whitened = false;
};

struct VideoClip {
  Tensor pixels;  // [F x H x W x 3], values in [0, 1]
  Real frame_rate = kVideoFrameRate;

  std::size_t num_frames() const { return pixels.dim(0); }
  std::size_t height() const { return pixels.dim(1); }
  std::size_t width() const { return pixels.dim(2); }
};

struct VideoGrid {
  std::size_t time_steps = 0;
  std::size_t rows = 0;
  std::size_t cols = 0;
  std::size_t size() const { return time_steps * rows * cols; }
};

struct VideoPatchSeq {
  Tensor patches;  // [N x 2304]
  VideoGrid grid;
};

struct Whitener {
  std::vector<Real> mean;
  std::vector<Real> stddev;
};

/// In-place iterative radix-2 FFT; size must be a power of two.
void fft(std::vector<std::complex<Real>>& data);

/// Center frequencies (Hz) of the mel filters, ascending.
std::vector<Real> mel_center_frequencies();

LfbeFrames compute_lfbe(const AudioWave& wave);
AudioPatchSeq stack_frames(const LfbeFrames& frames);
/// Inverse of stack_frames: [T' x 192] back to [3T' x 64].
Tensor unstack_frames(const AudioPatchSeq& patches);

Whitener fit_whitener(const Tensor& rows);
AudioPatchSeq whiten_clip(const AudioPatchSeq& patches, const Whitener& whitener);
/// Whitener as a [2 x D] tensor (mean row, std row) and back.
Tensor whitener_to_tensor(const Whitener& whitener);
Whitener whitener_from_tensor(const Tensor& tensor);

/// Linear-interpolation resampling to `target_rate`.
AudioWave resample(const AudioWave& wave, int target_rate);
/// Reads PCM16 mono WAV, resampling to 16 kHz when needed.
AudioWave read_wav(const std::filesystem::path& path);
void write_wav(const std::filesystem::path& path, const AudioWave& wave);

/// Keeps the frame nearest each tick of the target rate.
VideoClip reduce_frame_rate(const VideoClip& clip, Real target_fps);
/// Bilinear resize of the short side to `size` followed by a centered
/// size x size crop.
VideoClip center_crop_resize(const VideoClip& clip, std::size_t size = kVideoFrameSize);
/// Drops trailing frames so the count is a multiple of the tubelet depth.
VideoClip truncate_frames(const VideoClip& clip);
VideoPatchSeq extract_video_patches(const VideoClip& clip);

}  // namespace envasr::features
