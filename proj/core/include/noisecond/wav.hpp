#ifndef NOISECOND_WAV_HPP
#define NOISECOND_WAV_HPP

#include <string>

#include "noisecond/dsp.hpp"

namespace nc::wav {

// RIFF PCM, 16-bit signed little-endian, mono, 16 kHz. Amplitudes are
// normalized by 1/32768 on read. Anything else is rejected; there is no
// silent resampling.
dsp::Waveform read(const std::string& path);

// Clips to [-1, 1] and quantizes with the same 32768 scale used on read.
void write(const std::string& path, const dsp::Waveform& w);

}  // namespace nc::wav

#endif
