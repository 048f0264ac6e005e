#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "acegan/errors.hpp"
#include "acegan/rng.hpp"

namespace acegan {

// Five-way AAMI beat taxonomy.
enum class AamiClass { N = 0, S = 1, V = 2, F = 3, Q = 4 };

const char* aami_name(AamiClass c);

struct SignalSpec {
    std::string filename;
    int format = 212;
    double gain = 200.0;  // adu per mV
    int adc_zero = 0;
    int initial_value = 0;
    std::string description;
};

struct RecordHeader {
    std::string record_name;
    int num_signals = 0;
    double sampling_rate_hz = 0.0;
    int64_t num_samples = 0;
    std::vector<SignalSpec> signals;
};

struct Annotation {
    int64_t sample_index = 0;
    AamiClass beat_class = AamiClass::N;
    int raw_code = 0;
};

struct EcgRecord {
    RecordHeader header;
    std::vector<std::vector<int>> samples;  // [signal][sample], ADC units
    std::vector<Annotation> annotations;

    // One channel converted to millivolts: (adc - adc_zero) / gain.
    std::vector<double> channel_mv(int ch) const;
};

// Header text layout, one of two accepted signal-line dialects:
//   minimal:  "<file> <format> <gain> <adc_zero> <initial_value> [description]"
//   full:     "<file> <format> <gain> <adc_res> <adc_zero> <initial_value>
//              <checksum> <block_size> [description]"   (8+ tokens)
// First line: "<name> <num_signals> <rate> <num_samples>".
RecordHeader parse_header(const std::string& text);
std::string render_header(const RecordHeader& h);

// Format 212: two 12-bit two's-complement samples per 3 bytes,
//   A = b0 | ((b1 & 0x0F) << 8),  B = b2 | ((b1 & 0xF0) << 4),
// values >= 2048 mean value - 4096; channels interleave sample-by-sample.
std::vector<std::vector<int>> decode_format212(const std::vector<uint8_t>& bytes,
                                               int64_t num_samples,
                                               int num_signals);
std::vector<uint8_t> encode_format212(const std::vector<std::vector<int>>& samples);

struct RawAnnotation {
    int64_t sample_index = 0;
    int code = 0;
};

// MIT annotation stream: little-endian 16-bit words, high 6 bits = code, low
// 10 bits = time increment from the previous annotation. Code 0 with
// increment 0 terminates. SKIP (59) consumes a following 4-byte signed
// interval (high word first, each word little-endian) added to the running
// time. NUM/SUBTYP/CHAN (60-62) carry a value and no time. AUX (63) carries
// `increment` payload bytes padded to even length. Beat codes are returned;
// documented non-beat event codes advance time and are dropped; anything
// else raises UnknownCode.
std::vector<RawAnnotation> decode_annotations(const std::vector<uint8_t>& bytes);

// When decorate is non-null the emitted stream is sprinkled with NUM/SUBTYP/
// CHAN words and AUX payloads (all of which decode_annotations must consume
// and drop) so round trips exercise the whole grammar.
std::vector<uint8_t> encode_annotations(const std::vector<RawAnnotation>& anns,
                                        Rng* decorate = nullptr);

// Raw MIT code -> AAMI class. Throws NonBeatCode for documented event codes
// (callers drop those annotations) and UnknownCode for anything undocumented.
AamiClass map_class(int raw_code);

// True for codes map_class accepts as beats.
bool is_beat_code(int raw_code);

// Reads <name>.hea, the shared .dat, and <name>.atr from dir.
EcgRecord read_record(const std::filesystem::path& dir, const std::string& name);

// Writes the triplet; decode of the written bytes reproduces rec exactly.
// decorate (optional) injects non-beat annotation chatter, see
// encode_annotations.
void write_record(const EcgRecord& rec, const std::filesystem::path& dir,
                  Rng* decorate = nullptr);

}  // namespace acegan
