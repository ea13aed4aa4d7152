#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <numbers>

#include "p2m/audio/fft.hpp"
#include "p2m/audio/resample.hpp"
#include "p2m/audio/wav.hpp"
#include "p2m/core/error.hpp"
#include "support.hpp"

using namespace p2m;

namespace {

Waveform sine(double hz, int rate, double seconds, double amp = 0.5) {
  std::vector<double> x(static_cast<std::size_t>(seconds * rate));
  for (std::size_t i = 0; i < x.size(); ++i) x[i] = amp * std::sin(2.0 * std::numbers::pi * hz * i / rate);
  return Waveform(std::move(x), rate);
}

}  // namespace

TEST_CASE("wav 16-bit round trip within one quantisation step") {
  const auto w = sine(440.0, 32000, 0.25);
  const auto back = audio::decode_wav(audio::encode_wav16(w));
  REQUIRE(back.size() == w.size());
  CHECK(back.sample_rate() == 32000);
  double worst = 0.0;
  for (std::size_t i = 0; i < w.size(); ++i) worst = std::max(worst, std::abs(back[i] - w[i]));
  CHECK(worst <= 1.0 / 32767.0);
  CHECK(audio::encode_wav16(back) == audio::encode_wav16(w));
}

TEST_CASE("wav decoding rejects garbage") {
  CHECK_THROWS_AS(audio::decode_wav({'R', 'I', 'F', 'F', 0, 0}), IoError);
  CHECK_THROWS_AS(audio::read_wav("/nonexistent.wav"), IoError);
}

TEST_CASE("wav file write and read") {
  p2m::testing::TempDir tmp;
  const auto w = sine(220.0, 16000, 0.1);
  audio::write_wav16(w, tmp / "x.wav");
  CHECK(audio::read_wav(tmp / "x.wav").size() == w.size());
}

TEST_CASE("fft finds the tone bin") {
  audio::RealFft fft(1024);
  CHECK(fft.bins() == 513);
  std::vector<double> x(1024);
  for (std::size_t i = 0; i < x.size(); ++i) x[i] = std::cos(2.0 * std::numbers::pi * 64.0 * i / 1024.0);
  const auto mag = fft.magnitude(x);
  CHECK(std::max_element(mag.begin(), mag.end()) - mag.begin() == 64);
  CHECK(mag[64] == doctest::Approx(512.0).epsilon(1e-9));
  const auto hann = audio::hann_window(8);
  CHECK(hann.size() == 8);
}

TEST_CASE("resampling keeps duration and the tone") {
  const auto w = sine(1000.0, 44100, 1.0);
  const auto r = audio::resample(w, 32000);
  CHECK(r.sample_rate() == 32000);
  CHECK(r.size() == 32000);
  // Interior samples should match the analytic tone at the new rate.
  double worst = 0.0;
  for (std::size_t i = 500; i < r.size() - 500; ++i) {
    worst = std::max(worst, std::abs(r[i] - 0.5 * std::sin(2.0 * std::numbers::pi * 1000.0 * i / 32000.0)));
  }
  CHECK(worst < 1e-3);
  CHECK(audio::resample(r, 32000) == r);
}
