// Copyright 2026 The lgmsep Authors.
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

#ifndef BSS_SIGNAL_H_
#define BSS_SIGNAL_H_

#include <span>
#include <string>
#include <vector>

#include "bss/common.h"

namespace bss {

// Multichannel time-domain signal, channel-major.
struct Waveform {
  std::vector<std::vector<double>> channels;
  int sample_rate = 16000;

  Waveform() = default;
  Waveform(std::size_t num_channels, std::size_t length, int rate)
      : channels(num_channels, std::vector<double>(length, 0.0)),
        sample_rate(rate) {}

  std::size_t NumChannels() const { return channels.size(); }
  std::size_t Length() const {
    return channels.empty() ? 0 : channels.front().size();
  }

  // Throws unless all channels have equal length, the rate is positive and
  // every sample is finite.
  void Validate() const;
};

// Complex STFT tensor laid out as [F x N x I] with the channel index
// fastest, so that the observation vector x(f, n) is contiguous.
class ComplexSpectrogram {
 public:
  ComplexSpectrogram() = default;
  ComplexSpectrogram(std::size_t num_bins, std::size_t num_frames,
                     std::size_t num_channels, int sample_rate,
                     std::size_t win_len, std::size_t hop);

  std::size_t NumBins() const { return num_bins_; }
  std::size_t NumFrames() const { return num_frames_; }
  std::size_t NumChannels() const { return num_channels_; }
  int SampleRate() const { return sample_rate_; }
  std::size_t WinLen() const { return win_len_; }
  std::size_t Hop() const { return hop_; }

  Complex& operator()(std::size_t f, std::size_t n, std::size_t i) {
    return data_[(f * num_frames_ + n) * num_channels_ + i];
  }
  const Complex& operator()(std::size_t f, std::size_t n,
                            std::size_t i) const {
    return data_[(f * num_frames_ + n) * num_channels_ + i];
  }

  // x(f, n) as a contiguous span of length NumChannels().
  std::span<const Complex> Observation(std::size_t f, std::size_t n) const {
    return {data_.data() + (f * num_frames_ + n) * num_channels_,
            num_channels_};
  }

  std::vector<Complex>& Data() { return data_; }
  const std::vector<Complex>& Data() const { return data_; }

  // Copies channel i into a new single-channel spectrogram.
  ComplexSpectrogram Channel(std::size_t i) const;

  // Same metadata, zero data, different channel count.
  ComplexSpectrogram ZerosLike(std::size_t num_channels) const;

 private:
  std::size_t num_bins_ = 0;
  std::size_t num_frames_ = 0;
  std::size_t num_channels_ = 0;
  int sample_rate_ = 0;
  std::size_t win_len_ = 0;
  std::size_t hop_ = 0;
  std::vector<Complex> data_;
};

struct StftConfig {
  std::size_t win_len = 2048;
  std::size_t hop = 1024;

  // win_ms must convert to an even sample count; hop = round(win * ratio).
  static StftConfig FromMs(double win_ms, double hop_ratio, int sample_rate);
};

// Symmetric Hamming window, w[t] = 0.54 - 0.46 cos(2 pi t / (L - 1)).
std::vector<double> HammingWindow(std::size_t length);

// One-sided STFT with a Hamming analysis window. Frames that would run past
// the end of the signal are dropped.
ComplexSpectrogram Stft(const Waveform& wave, const StftConfig& config);
ComplexSpectrogram Stft(const Waveform& wave, double win_ms = 128.0,
                        double hop_ratio = 0.5);

// Weighted overlap-add inverse, normalized by the per-sample sum of squared
// windows. Output length is (N - 1) * hop + win_len.
Waveform Istft(const ComplexSpectrogram& spec);

// RIFF/WAVE I/O. Reads PCM16 and IEEE float32; writes float32 unless
// pcm16 is set.
Waveform ReadWav(const std::string& path);
void WriteWav(const std::string& path, const Waveform& wave,
              bool pcm16 = false);

}  // namespace bss

#endif  // BSS_SIGNAL_H_
