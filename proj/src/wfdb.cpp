#include "acegan/wfdb.hpp"

#include <cstdlib>
#include <fstream>
#include <iomanip>
#include <sstream>

namespace acegan {

namespace {

// MIT annotation codes.
enum : int {
    kSkip = 59,   // 4-byte time interval follows
    kNum = 60,
    kSubtyp = 61,
    kChan = 62,
    kAux = 63,    // `increment` payload bytes follow, padded to even
};

// Raw beat codes by AAMI class:
//   N: NORMAL 1, LBBB 2, RBBB 3, NESC 11, AESC 34
//   S: ABERR 4, NPC 7, APC 8, SVPB 9
//   V: PVC 5, VESC 10
//   F: FUSION 6
//   Q: PACE 12, UNKNOWN 13, PFUS 38
bool beat_class_of(int code, AamiClass* out) {
    switch (code) {
        case 1: case 2: case 3: case 11: case 34:
            *out = AamiClass::N;
            return true;
        case 4: case 7: case 8: case 9:
            *out = AamiClass::S;
            return true;
        case 5: case 10:
            *out = AamiClass::V;
            return true;
        case 6:
            *out = AamiClass::F;
            return true;
        case 12: case 13: case 38:
            *out = AamiClass::Q;
            return true;
        default:
            return false;
    }
}

// Event codes that occupy a time slot but carry no beat: noise/artifact
// marks, ST/T changes, waveform boundaries, rhythm changes and the
// structural codes. Documented so parsing stays fail-loud for anything else.
bool is_known_nonbeat(int code) {
    switch (code) {
        case 14: case 16: case 18: case 19: case 20: case 21: case 22:
        case 23: case 24: case 26: case 27: case 28: case 30: case 31:
        case 32: case 33: case 36: case 39: case 40: case 41:
        case kSkip: case kNum: case kSubtyp: case kChan: case kAux:
            return true;
        default:
            return false;
    }
}

std::vector<std::string> tokenize(const std::string& line) {
    std::vector<std::string> out;
    std::istringstream ss(line);
    std::string tok;
    while (ss >> tok) out.push_back(tok);
    return out;
}

int64_t parse_int(const std::string& tok, const char* what) {
    size_t pos = 0;
    int64_t v = 0;
    try {
        v = std::stoll(tok, &pos);
    } catch (const std::exception&) {
        throw MalformedHeader(std::string(what) + ": not a number: " + tok);
    }
    if (pos != tok.size())
        throw MalformedHeader(std::string(what) + ": not a number: " + tok);
    return v;
}

// Leading numeric part; WFDB gain tokens may carry suffixes like "200/mV".
double parse_gain(const std::string& tok) {
    const char* s = tok.c_str();
    char* end = nullptr;
    const double v = std::strtod(s, &end);
    if (end == s)
        throw MalformedHeader("gain: not a number: " + tok);
    return v;
}

std::string join_from(const std::vector<std::string>& toks, size_t i) {
    std::string out;
    for (; i < toks.size(); ++i) {
        if (!out.empty()) out += " ";
        out += toks[i];
    }
    return out;
}

std::vector<uint8_t> slurp(const std::filesystem::path& p) {
    std::ifstream f(p, std::ios::binary);
    if (!f) throw MalformedRecord("cannot open " + p.string());
    std::vector<uint8_t> bytes((std::istreambuf_iterator<char>(f)),
                               std::istreambuf_iterator<char>());
    return bytes;
}

void spit(const std::filesystem::path& p, const void* data, size_t n) {
    std::ofstream f(p, std::ios::binary);
    if (!f) throw MalformedRecord("cannot open " + p.string() + " for writing");
    f.write(static_cast<const char*>(data), static_cast<std::streamsize>(n));
    if (!f) throw MalformedRecord("write failed: " + p.string());
}

}  // namespace

const char* aami_name(AamiClass c) {
    switch (c) {
        case AamiClass::N: return "N";
        case AamiClass::S: return "S";
        case AamiClass::V: return "V";
        case AamiClass::F: return "F";
        case AamiClass::Q: return "Q";
    }
    return "?";
}

std::vector<double> EcgRecord::channel_mv(int ch) const {
    if (ch < 0 || ch >= static_cast<int>(samples.size()))
        throw MalformedRecord("channel " + std::to_string(ch) + " of " +
                              std::to_string(samples.size()));
    const SignalSpec& spec = header.signals[static_cast<size_t>(ch)];
    std::vector<double> mv(samples[static_cast<size_t>(ch)].size());
    for (size_t i = 0; i < mv.size(); ++i)
        mv[i] = (samples[static_cast<size_t>(ch)][i] - spec.adc_zero) / spec.gain;
    return mv;
}

RecordHeader parse_header(const std::string& text) {
    std::istringstream ss(text);
    std::string line;
    std::vector<std::vector<std::string>> lines;
    while (std::getline(ss, line)) {
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.empty() || line[0] == '#') continue;
        lines.push_back(tokenize(line));
    }
    if (lines.empty()) throw MalformedHeader("empty header");
    const auto& first = lines[0];
    if (first.size() < 4)
        throw MalformedHeader("record line needs name, signals, rate, samples");
    RecordHeader h;
    h.record_name = first[0];
    h.num_signals = static_cast<int>(parse_int(first[1], "num_signals"));
    h.sampling_rate_hz = parse_gain(first[2]);
    h.num_samples = parse_int(first[3], "num_samples");
    if (h.num_signals <= 0)
        throw MalformedHeader("record advertises " +
                              std::to_string(h.num_signals) + " signals");
    if (h.sampling_rate_hz <= 0.0)
        throw MalformedHeader("sampling rate must be positive");
    if (h.num_samples < 0) throw MalformedHeader("negative sample count");
    if (lines.size() < 1 + static_cast<size_t>(h.num_signals))
        throw MalformedHeader("missing signal lines");
    for (int s = 0; s < h.num_signals; ++s) {
        const auto& toks = lines[1 + static_cast<size_t>(s)];
        if (toks.size() < 5)
            throw MalformedHeader("signal line needs at least 5 fields");
        SignalSpec spec;
        spec.filename = toks[0];
        const int64_t fmt = parse_int(toks[1], "format");
        if (fmt != 212)
            throw UnsupportedFormat("signal format " + std::to_string(fmt) +
                                    " (only 212 supported)");
        spec.format = 212;
        spec.gain = parse_gain(toks[2]);
        if (toks.size() >= 8) {
            // full dialect: gain, adc resolution, adc zero, initial value,
            // checksum, block size, description
            spec.adc_zero = static_cast<int>(parse_int(toks[4], "adc_zero"));
            spec.initial_value =
                static_cast<int>(parse_int(toks[5], "initial_value"));
            spec.description = join_from(toks, 8);
        } else {
            spec.adc_zero = static_cast<int>(parse_int(toks[3], "adc_zero"));
            spec.initial_value =
                static_cast<int>(parse_int(toks[4], "initial_value"));
            spec.description = join_from(toks, 5);
        }
        if (spec.gain == 0.0) throw MalformedHeader("zero gain");
        h.signals.push_back(std::move(spec));
    }
    return h;
}

std::string render_header(const RecordHeader& h) {
    std::ostringstream out;
    out << std::setprecision(17);
    out << h.record_name << " " << h.num_signals << " " << h.sampling_rate_hz
        << " " << h.num_samples << "\n";
    for (const SignalSpec& s : h.signals) {
        out << s.filename << " " << s.format << " " << s.gain << " "
            << s.adc_zero << " " << s.initial_value;
        if (!s.description.empty()) out << " " << s.description;
        out << "\n";
    }
    return out.str();
}

std::vector<std::vector<int>> decode_format212(const std::vector<uint8_t>& bytes,
                                               int64_t num_samples,
                                               int num_signals) {
    if (num_signals <= 0) throw MalformedRecord("no signals");
    if (num_samples < 0) throw MalformedRecord("negative sample count");
    const int64_t total = num_samples * num_signals;
    const int64_t need = (total + 1) / 2 * 3;
    if (static_cast<int64_t>(bytes.size()) < need)
        throw TruncatedSignal("format 212: need " + std::to_string(need) +
                              " bytes, have " + std::to_string(bytes.size()));
    std::vector<std::vector<int>> out(
        static_cast<size_t>(num_signals),
        std::vector<int>(static_cast<size_t>(num_samples)));
    for (int64_t v = 0; v < total; ++v) {
        const int64_t pair = v / 2;
        const uint8_t b0 = bytes[static_cast<size_t>(pair * 3)];
        const uint8_t b1 = bytes[static_cast<size_t>(pair * 3 + 1)];
        const uint8_t b2 = bytes[static_cast<size_t>(pair * 3 + 2)];
        int raw = (v % 2 == 0) ? (b0 | ((b1 & 0x0F) << 8))
                               : (b2 | ((b1 & 0xF0) << 4));
        if (raw >= 2048) raw -= 4096;
        out[static_cast<size_t>(v % num_signals)]
           [static_cast<size_t>(v / num_signals)] = raw;
    }
    return out;
}

std::vector<uint8_t> encode_format212(
    const std::vector<std::vector<int>>& samples) {
    if (samples.empty()) throw MalformedRecord("no signals");
    const size_t ns = samples[0].size();
    for (const auto& sig : samples)
        if (sig.size() != ns)
            throw MalformedRecord("signals have unequal lengths");
    const int64_t total = static_cast<int64_t>(ns * samples.size());
    std::vector<uint8_t> bytes(static_cast<size_t>((total + 1) / 2 * 3), 0);
    int held = 0;  // first value of the current pair
    for (int64_t v = 0; v < total; ++v) {
        const int raw =
            samples[static_cast<size_t>(v % static_cast<int64_t>(samples.size()))]
                   [static_cast<size_t>(v / static_cast<int64_t>(samples.size()))];
        if (raw < -2048 || raw > 2047)
            throw SampleOutOfRange("sample " + std::to_string(raw) +
                                   " outside [-2048, 2047]");
        const int bits = raw & 0xFFF;
        const int64_t pair = v / 2;
        if (v % 2 == 0) {
            held = bits;
            bytes[static_cast<size_t>(pair * 3)] =
                static_cast<uint8_t>(bits & 0xFF);
            bytes[static_cast<size_t>(pair * 3 + 1)] =
                static_cast<uint8_t>((bits >> 8) & 0x0F);
        } else {
            bytes[static_cast<size_t>(pair * 3 + 1)] = static_cast<uint8_t>(
                ((held >> 8) & 0x0F) | (((bits >> 8) & 0x0F) << 4));
            bytes[static_cast<size_t>(pair * 3 + 2)] =
                static_cast<uint8_t>(bits & 0xFF);
        }
    }
    return bytes;
}

std::vector<RawAnnotation> decode_annotations(const std::vector<uint8_t>& bytes) {
    std::vector<RawAnnotation> out;
    size_t pos = 0;
    const auto read_word = [&]() -> uint16_t {
        if (pos + 2 > bytes.size())
            throw TruncatedAnnotations("annotation stream ends mid-word");
        const uint16_t w = static_cast<uint16_t>(bytes[pos] | (bytes[pos + 1] << 8));
        pos += 2;
        return w;
    };
    int64_t time = 0;
    int64_t last_beat_time = -1;
    while (true) {
        const uint16_t w = read_word();
        const int code = w >> 10;
        const int inc = w & 0x3FF;
        if (code == 0 && inc == 0) return out;  // EOF marker
        if (code == kSkip) {
            const uint16_t hi = read_word();
            const uint16_t lo = read_word();
            const int32_t interval =
                static_cast<int32_t>((static_cast<uint32_t>(hi) << 16) | lo);
            time += interval;
            continue;
        }
        if (code == kNum || code == kSubtyp || code == kChan) continue;
        if (code == kAux) {
            const size_t len = static_cast<size_t>(inc);
            const size_t padded = len + (len & 1);
            if (pos + padded > bytes.size())
                throw TruncatedAnnotations("aux payload truncated");
            pos += padded;
            continue;
        }
        AamiClass cls;
        if (beat_class_of(code, &cls)) {
            time += inc;
            if (time <= last_beat_time)
                throw MalformedRecord(
                    "annotation times not strictly increasing at sample " +
                    std::to_string(time));
            last_beat_time = time;
            out.push_back({time, code});
        } else if (is_known_nonbeat(code)) {
            time += inc;  // event mark: occupies time, carries no beat
        } else {
            throw UnknownCode("annotation code " + std::to_string(code));
        }
    }
}

std::vector<uint8_t> encode_annotations(const std::vector<RawAnnotation>& anns,
                                        Rng* decorate) {
    std::vector<uint8_t> bytes;
    const auto put_word = [&](uint16_t w) {
        bytes.push_back(static_cast<uint8_t>(w & 0xFF));
        bytes.push_back(static_cast<uint8_t>(w >> 8));
    };
    const auto put_decoration = [&] {
        switch (decorate->below(4)) {
            case 0:
                put_word(static_cast<uint16_t>((kNum << 10) |
                                               decorate->below(1024)));
                break;
            case 1:
                put_word(static_cast<uint16_t>((kSubtyp << 10) |
                                               decorate->below(1024)));
                break;
            case 2:
                put_word(static_cast<uint16_t>((kChan << 10) |
                                               decorate->below(4)));
                break;
            default: {
                const int len = static_cast<int>(decorate->below(12));
                put_word(static_cast<uint16_t>((kAux << 10) | len));
                for (int i = 0; i < len + (len & 1); ++i)
                    bytes.push_back(static_cast<uint8_t>(
                        'a' + decorate->below(26)));
                break;
            }
        }
    };
    int64_t time = 0;
    for (size_t i = 0; i < anns.size(); ++i) {
        const RawAnnotation& a = anns[i];
        if (!is_beat_code(a.code))
            throw MalformedRecord("cannot encode code " +
                                  std::to_string(a.code) + " as a beat");
        const int64_t delta = a.sample_index - time;
        if (delta < 0 || (i > 0 && delta == 0))
            throw MalformedRecord("annotation times must strictly increase");
        if (decorate && decorate->below(10) < 3) put_decoration();
        const bool force_skip = decorate && decorate->below(10) == 0;
        if (delta > 1023 || (force_skip && delta > 0)) {
            put_word(static_cast<uint16_t>(kSkip << 10));
            const uint32_t u = static_cast<uint32_t>(static_cast<int32_t>(delta));
            put_word(static_cast<uint16_t>(u >> 16));
            put_word(static_cast<uint16_t>(u & 0xFFFF));
            put_word(static_cast<uint16_t>(a.code << 10));
        } else {
            put_word(static_cast<uint16_t>((a.code << 10) | delta));
        }
        time = a.sample_index;
    }
    if (decorate && decorate->below(10) < 3) put_decoration();
    put_word(0);  // EOF
    return bytes;
}

AamiClass map_class(int raw_code) {
    AamiClass cls;
    if (beat_class_of(raw_code, &cls)) return cls;
    if (is_known_nonbeat(raw_code))
        throw NonBeatCode("code " + std::to_string(raw_code) +
                          " marks an event, not a beat");
    throw UnknownCode("annotation code " + std::to_string(raw_code));
}

bool is_beat_code(int raw_code) {
    AamiClass cls;
    return beat_class_of(raw_code, &cls);
}

EcgRecord read_record(const std::filesystem::path& dir,
                      const std::string& name) {
    EcgRecord rec;
    {
        std::ifstream f(dir / (name + ".hea"));
        if (!f)
            throw MalformedRecord("cannot open " + (dir / (name + ".hea")).string());
        std::ostringstream text;
        text << f.rdbuf();
        rec.header = parse_header(text.str());
    }
    for (const SignalSpec& s : rec.header.signals)
        if (s.filename != rec.header.signals[0].filename)
            throw UnsupportedFormat(
                "signals split across multiple files are not supported");
    rec.samples = decode_format212(slurp(dir / rec.header.signals[0].filename),
                                   rec.header.num_samples,
                                   rec.header.num_signals);
    const std::vector<RawAnnotation> raw =
        decode_annotations(slurp(dir / (name + ".atr")));
    rec.annotations.reserve(raw.size());
    for (const RawAnnotation& a : raw) {
        if (a.sample_index < 0 || a.sample_index >= rec.header.num_samples)
            throw MalformedRecord("annotation at sample " +
                                  std::to_string(a.sample_index) +
                                  " outside record of " +
                                  std::to_string(rec.header.num_samples));
        rec.annotations.push_back({a.sample_index, map_class(a.code), a.code});
    }
    return rec;
}

void write_record(const EcgRecord& rec, const std::filesystem::path& dir,
                  Rng* decorate) {
    RecordHeader h = rec.header;
    if (h.num_signals != static_cast<int>(rec.samples.size()))
        throw MalformedRecord("header signal count does not match data");
    for (SignalSpec& s : h.signals)
        if (s.filename.empty()) s.filename = h.record_name + ".dat";
    std::filesystem::create_directories(dir);
    const std::string head = render_header(h);
    spit(dir / (h.record_name + ".hea"), head.data(), head.size());
    const std::vector<uint8_t> dat = encode_format212(rec.samples);
    spit(dir / h.signals[0].filename, dat.data(), dat.size());
    std::vector<RawAnnotation> raw;
    raw.reserve(rec.annotations.size());
    for (const Annotation& a : rec.annotations)
        raw.push_back({a.sample_index, a.raw_code});
    const std::vector<uint8_t> atr = encode_annotations(raw, decorate);
    spit(dir / (h.record_name + ".atr"), atr.data(), atr.size());
}

}  // namespace acegan
