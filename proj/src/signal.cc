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

#include "bss/signal.h"

#include <cmath>
#include <numbers>

#include "bss/fft.h"

namespace bss {

void Waveform::Validate() const {
  if (sample_rate <= 0) throw Error("sample rate must be positive");
  const std::size_t len = Length();
  for (std::size_t c = 0; c < channels.size(); ++c) {
    if (channels[c].size() != len) {
      throw Error("channel " + std::to_string(c) + " has length " +
                  std::to_string(channels[c].size()) + ", expected " +
                  std::to_string(len));
    }
    for (double v : channels[c]) {
      if (!std::isfinite(v)) {
        throw Error("non-finite sample in channel " + std::to_string(c));
      }
    }
  }
}

ComplexSpectrogram::ComplexSpectrogram(std::size_t num_bins,
                                       std::size_t num_frames,
                                       std::size_t num_channels,
                                       int sample_rate, std::size_t win_len,
                                       std::size_t hop)
    : num_bins_(num_bins),
      num_frames_(num_frames),
      num_channels_(num_channels),
      sample_rate_(sample_rate),
      win_len_(win_len),
      hop_(hop),
      data_(num_bins * num_frames * num_channels) {}

ComplexSpectrogram ComplexSpectrogram::Channel(std::size_t i) const {
  if (i >= num_channels_) throw Error("channel index out of range");
  ComplexSpectrogram out = ZerosLike(1);
  for (std::size_t f = 0; f < num_bins_; ++f) {
    for (std::size_t n = 0; n < num_frames_; ++n) {
      out(f, n, 0) = (*this)(f, n, i);
    }
  }
  return out;
}

ComplexSpectrogram ComplexSpectrogram::ZerosLike(
    std::size_t num_channels) const {
  return ComplexSpectrogram(num_bins_, num_frames_, num_channels,
                            sample_rate_, win_len_, hop_);
}

StftConfig StftConfig::FromMs(double win_ms, double hop_ratio,
                              int sample_rate) {
  if (win_ms <= 0.0) throw Error("window length must be positive");
  if (!(hop_ratio > 0.0 && hop_ratio <= 1.0)) {
    throw Error("hop ratio must lie in (0, 1]");
  }
  const auto win = static_cast<std::size_t>(
      std::llround(win_ms * 1e-3 * static_cast<double>(sample_rate)));
  if (win < 2 || win % 2 != 0) {
    throw Error("window of " + std::to_string(win_ms) + " ms gives " +
                std::to_string(win) + " samples; an even count is required");
  }
  StftConfig config;
  config.win_len = win;
  config.hop = static_cast<std::size_t>(
      std::llround(hop_ratio * static_cast<double>(win)));
  if (config.hop == 0) config.hop = 1;
  return config;
}

std::vector<double> HammingWindow(std::size_t length) {
  std::vector<double> w(length, 1.0);
  if (length < 2) return w;
  const double denom = static_cast<double>(length - 1);
  for (std::size_t t = 0; t < length; ++t) {
    w[t] = 0.54 - 0.46 * std::cos(2.0 * std::numbers::pi *
                                  static_cast<double>(t) / denom);
  }
  return w;
}

ComplexSpectrogram Stft(const Waveform& wave, const StftConfig& config) {
  wave.Validate();
  const std::size_t win = config.win_len;
  const std::size_t hop = config.hop;
  if (win == 0 || hop == 0 || hop > win) throw Error("invalid STFT config");
  const std::size_t len = wave.Length();
  if (len < win) throw Error("signal too short");
  const std::size_t num_frames = (len - win) / hop + 1;
  const std::size_t num_bins = win / 2 + 1;
  ComplexSpectrogram spec(num_bins, num_frames, wave.NumChannels(),
                          wave.sample_rate, win, hop);

  const std::vector<double> window = HammingWindow(win);
  RealFft fft(win);
  std::vector<double> frame(win);
  std::vector<Complex> bins(num_bins);
  for (std::size_t c = 0; c < wave.NumChannels(); ++c) {
    const std::vector<double>& x = wave.channels[c];
    for (std::size_t n = 0; n < num_frames; ++n) {
      const std::size_t start = n * hop;
      for (std::size_t t = 0; t < win; ++t) {
        frame[t] = x[start + t] * window[t];
      }
      fft.Forward(frame, bins);
      for (std::size_t f = 0; f < num_bins; ++f) spec(f, n, c) = bins[f];
    }
  }
  return spec;
}

ComplexSpectrogram Stft(const Waveform& wave, double win_ms,
                        double hop_ratio) {
  return Stft(wave, StftConfig::FromMs(win_ms, hop_ratio, wave.sample_rate));
}

Waveform Istft(const ComplexSpectrogram& spec) {
  const std::size_t win = spec.WinLen();
  const std::size_t hop = spec.Hop();
  const std::size_t num_frames = spec.NumFrames();
  if (win == 0 || hop == 0 || spec.NumBins() != win / 2 + 1) {
    throw Error("inconsistent STFT metadata");
  }
  if (num_frames == 0) {
    return Waveform(spec.NumChannels(), 0, spec.SampleRate());
  }
  const std::size_t len = (num_frames - 1) * hop + win;
  const std::vector<double> window = HammingWindow(win);

  std::vector<double> norm(len, 0.0);
  for (std::size_t n = 0; n < num_frames; ++n) {
    for (std::size_t t = 0; t < win; ++t) {
      norm[n * hop + t] += window[t] * window[t];
    }
  }
  for (double d : norm) {
    if (!(d > 0.0)) throw Error("zero window-sum in overlap-add");
  }

  Waveform out(spec.NumChannels(), len, spec.SampleRate());
  RealFft fft(win);
  std::vector<Complex> bins(spec.NumBins());
  std::vector<double> frame(win);
  for (std::size_t c = 0; c < spec.NumChannels(); ++c) {
    std::vector<double>& y = out.channels[c];
    for (std::size_t n = 0; n < num_frames; ++n) {
      for (std::size_t f = 0; f < bins.size(); ++f) bins[f] = spec(f, n, c);
      fft.Inverse(bins, frame);
      const std::size_t start = n * hop;
      for (std::size_t t = 0; t < win; ++t) {
        y[start + t] += frame[t] * window[t];
      }
    }
    for (std::size_t t = 0; t < len; ++t) y[t] /= norm[t];
  }
  return out;
}

}  // namespace bss
