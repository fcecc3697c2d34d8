#include "bpr/io.hpp"

#include <json.hpp>
#include <zlib.h>

#include <cmath>
#include <cstring>
#include <fstream>
#include <sstream>
#include <stdexcept>

using nlohmann::json;

namespace bpr::io {

namespace {

std::size_t shape_count(const std::vector<int>& shape) {
    std::size_t n = 1;
    for (int s : shape) {
        if (s < 0) throw std::invalid_argument("array shape entries must be nonnegative");
        n *= static_cast<std::size_t>(s);
    }
    return n;
}

void write_array(const std::string& path, const char* dtype, const void* bytes, std::size_t nbytes,
                 const std::vector<int>& shape) {
    json hdr;
    hdr["dtype"] = dtype;
    hdr["shape"] = shape;
    hdr["order"] = "little";
    hdr["layout"] = "row-major";
    std::ofstream out(path, std::ios::binary);
    if (!out) throw std::runtime_error("cannot open for writing: " + path);
    std::string h = hdr.dump();
    out.write(h.data(), static_cast<std::streamsize>(h.size()));
    out.put('\n');
    out.write(static_cast<const char*>(bytes), static_cast<std::streamsize>(nbytes));
    if (!out) throw std::runtime_error("write failed: " + path);
}

json read_array_header(std::ifstream& in, const std::string& path, const char* want_dtype,
                       std::vector<int>& shape) {
    std::string line;
    if (!std::getline(in, line)) throw std::runtime_error("missing array header: " + path);
    json hdr = json::parse(line);
    if (hdr.at("dtype").get<std::string>() != want_dtype)
        throw std::runtime_error("unexpected dtype in " + path);
    if (hdr.at("order").get<std::string>() != "little" || hdr.at("layout").get<std::string>() != "row-major")
        throw std::runtime_error("unsupported array encoding in " + path);
    shape = hdr.at("shape").get<std::vector<int>>();
    return hdr;
}

MetricKind metric_kind_from_name(const std::string& s) {
    if (s == "agm") return MetricKind::AGM;
    if (s == "ipm") return MetricKind::IPM;
    if (s == "igm") return MetricKind::IGM;
    if (s == "stagm") return MetricKind::STAGM;
    if (s == "pagm") return MetricKind::pAGM;
    if (s == "pipm") return MetricKind::pIPM;
    throw std::invalid_argument("unknown metric name: " + s);
}

DampingKind damping_kind_from_name(const std::string& s) {
    if (s == "marquardt") return DampingKind::Marquardt;
    if (s == "fanyuan") return DampingKind::FanYuan;
    if (s == "thresholded") return DampingKind::Thresholded;
    throw std::invalid_argument("unknown damping rule: " + s);
}

} // namespace

void write_c128(const std::string& path, const CVec& data, const std::vector<int>& shape) {
    if (shape_count(shape) != data.size()) throw std::invalid_argument("shape does not match data length");
    write_array(path, "c128", data.data(), data.size() * sizeof(cdouble), shape);
}

void write_f64(const std::string& path, const RVec& data, const std::vector<int>& shape) {
    if (shape_count(shape) != data.size()) throw std::invalid_argument("shape does not match data length");
    write_array(path, "f64", data.data(), data.size() * sizeof(double), shape);
}

CVec read_c128(const std::string& path, std::vector<int>& shape) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw std::runtime_error("cannot open: " + path);
    read_array_header(in, path, "c128", shape);
    CVec data(shape_count(shape));
    in.read(reinterpret_cast<char*>(data.data()), static_cast<std::streamsize>(data.size() * sizeof(cdouble)));
    if (!in) throw std::runtime_error("truncated array file: " + path);
    return data;
}

RVec read_f64(const std::string& path, std::vector<int>& shape) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw std::runtime_error("cannot open: " + path);
    read_array_header(in, path, "f64", shape);
    RVec data(shape_count(shape));
    in.read(reinterpret_cast<char*>(data.data()), static_cast<std::streamsize>(data.size() * sizeof(double)));
    if (!in) throw std::runtime_error("truncated array file: " + path);
    return data;
}

void save_measurements(const std::string& path, const MeasurementStack& f) {
    RVec flat;
    flat.reserve(f.total_len());
    for (const auto& fr : f.frames) flat.insert(flat.end(), fr.begin(), fr.end());
    int len = f.count() ? static_cast<int>(f.frames[0].size()) : 0;
    write_f64(path, flat, {f.count(), len});
}

MeasurementStack load_measurements(const std::string& path) {
    std::vector<int> shape;
    RVec flat = read_f64(path, shape);
    if (shape.size() != 2) throw std::runtime_error("measurement file must be 2-D: " + path);
    std::vector<RVec> frames(shape[0]);
    std::size_t o = 0;
    for (int j = 0; j < shape[0]; ++j) {
        frames[j].assign(flat.begin() + o, flat.begin() + o + shape[1]);
        o += static_cast<std::size_t>(shape[1]);
    }
    return MeasurementStack(std::move(frames));
}

std::string model_to_json_text(const Model& model) {
    json j;
    switch (model.kind) {
        case ModelCase::PtychoI: j["case"] = "ptycho"; break;
        case ModelCase::FourierPtychoII: j["case"] = "fourier_ptycho"; break;
        case ModelCase::FrogIII: j["case"] = "frog"; break;
        case ModelCase::ConvIV: j["case"] = "conv"; break;
    }
    j["image_side"] = model.image_side();
    if (model.kind == ModelCase::PtychoI || model.kind == ModelCase::FourierPtychoII) {
        j["frame_side"] = model.geometry.frame_side;
        j["offsets"] = json::array();
        for (const auto& o : model.geometry.offsets) j["offsets"].push_back({o[0], o[1]});
    } else if (model.kind == ModelCase::FrogIII) {
        j["shift_step"] = model.shift_step;
        j["num_shifts"] = model.num_shifts;
    } else {
        j["conv_fourier"] = model.conv_fourier;
    }
    return j.dump(2);
}

Model model_from_json_text(const std::string& text) {
    json j = json::parse(text);
    std::string kind = j.at("case").get<std::string>();
    int side = j.at("image_side").get<int>();
    if (kind == "ptycho" || kind == "fourier_ptycho") {
        std::vector<std::array<int, 2>> offs;
        for (const auto& o : j.at("offsets")) offs.push_back({o.at(0).get<int>(), o.at(1).get<int>()});
        ScanGeometry g(std::move(offs), j.at("frame_side").get<int>(), side);
        return kind == "ptycho" ? Model::ptycho(std::move(g)) : Model::fourier_ptycho(std::move(g));
    }
    if (kind == "frog") return Model::frog(side, j.at("shift_step").get<int>(), j.at("num_shifts").get<int>());
    if (kind == "conv") return Model::convolution(side, j.at("conv_fourier").get<bool>());
    throw std::invalid_argument("unknown model case: " + kind);
}

SolverConfig solver_config_from_json_text(const std::string& text) {
    json j = json::parse(text);
    SolverConfig c;
    double metric_eps = 0.0;
    std::string metric_name = "agm";
    for (const auto& [key, val] : j.items()) {
        if (key == "max_iter") c.max_iter = val.get<int>();
        else if (key == "tol") c.tol = val.get<double>();
        else if (key == "seed") c.seed = val.get<std::uint64_t>();
        else if (key == "inner_steps") c.inner_steps = val.get<int>();
        else if (key == "d1") c.d1 = val.get<double>();
        else if (key == "d2") c.d2 = val.get<double>();
        else if (key == "delta") c.delta = val.get<double>();
        else if (key == "gamma") c.gamma = val.get<double>();
        else if (key == "beta") c.beta = val.get<double>();
        else if (key == "alpha1") c.alpha1 = val.get<double>();
        else if (key == "alpha2") c.alpha2 = val.get<double>();
        else if (key == "epsilon") c.epsilon = val.get<double>();
        else if (key == "alpha_bar1") c.alpha_bar1 = val.get<double>();
        else if (key == "alpha_bar2") c.alpha_bar2 = val.get<double>();
        else if (key == "C_w") c.C_w = val.get<double>();
        else if (key == "C_u") c.C_u = val.get<double>();
        else if (key == "beta1") c.beta1 = val.get<double>();
        else if (key == "beta2") c.beta2 = val.get<double>();
        else if (key == "momentum") c.momentum = val.get<double>();
        else if (key == "prox_inner_steps") c.prox_inner_steps = val.get<int>();
        else if (key == "metric") metric_name = val.get<std::string>();
        else if (key == "metric_epsilon") metric_eps = val.get<double>();
        else if (key == "damping") {
            for (const auto& [dk, dv] : val.items()) {
                if (dk == "kind") c.damping.kind = damping_kind_from_name(dv.get<std::string>());
                else if (dk == "mu0") c.damping.mu0 = dv.get<double>();
                else if (dk == "nu") c.damping.nu = dv.get<double>();
                else if (dk == "tau") c.damping.tau = dv.get<double>();
                else if (dk == "c0") c.damping.c0 = dv.get<double>();
                else throw std::invalid_argument("unknown damping config key: " + dk);
            }
        } else {
            throw std::invalid_argument("unknown config key: " + key);
        }
    }
    c.metric = Metric(metric_kind_from_name(metric_name), metric_eps);
    c.validate();
    return c;
}

SolverConfig solver_config_from_file(const std::string& path) {
    return solver_config_from_json_text(read_text_file(path));
}

void write_report(const std::string& path, const SolverReport& report) {
    json j;
    j["objective_history"] = report.objective_history;
    j["residual_history"] = report.residual_history;
    j["iterations_run"] = report.iterations_run;
    if (report.aligned_error) j["aligned_error"] = *report.aligned_error;
    else j["aligned_error"] = nullptr;
    auto dump_c = [](const CVec& v) {
        RVec re(v.size()), im(v.size());
        for (std::size_t i = 0; i < v.size(); ++i) { re[i] = v[i].real(); im[i] = v[i].imag(); }
        return json{{"re", re}, {"im", im}};
    };
    j["final_w"] = dump_c(report.final_w.data);
    j["final_w_side"] = report.final_w.side;
    j["final_u"] = dump_c(report.final_u.data);
    j["final_u_side"] = report.final_u.side;
    write_text_file(path, j.dump(2) + "\n");
}

SolverReport read_report(const std::string& path) {
    json j = json::parse(read_text_file(path));
    SolverReport r;
    r.objective_history = j.at("objective_history").get<RVec>();
    r.residual_history = j.at("residual_history").get<RVec>();
    r.iterations_run = j.at("iterations_run").get<int>();
    if (!j.at("aligned_error").is_null()) r.aligned_error = j.at("aligned_error").get<double>();
    auto load_c = [&](const json& o) {
        RVec re = o.at("re").get<RVec>(), im = o.at("im").get<RVec>();
        CVec v(re.size());
        for (std::size_t i = 0; i < v.size(); ++i) v[i] = cdouble(re[i], im[i]);
        return v;
    };
    int ws = j.at("final_w_side").get<int>(), us = j.at("final_u_side").get<int>();
    if (ws > 0) r.final_w = Probe(load_c(j.at("final_w")), ws);
    if (us > 0) r.final_u = ComplexImage(load_c(j.at("final_u")), us);
    return r;
}

std::string read_text_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw std::runtime_error("cannot open: " + path);
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

void write_text_file(const std::string& path, const std::string& text) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw std::runtime_error("cannot open for writing: " + path);
    out.write(text.data(), static_cast<std::streamsize>(text.size()));
    if (!out) throw std::runtime_error("write failed: " + path);
}

namespace {

void png_chunk(std::ofstream& out, const char* tag, const std::vector<unsigned char>& payload) {
    auto be32 = [&](std::uint32_t v) {
        unsigned char b[4] = {static_cast<unsigned char>(v >> 24), static_cast<unsigned char>(v >> 16),
                              static_cast<unsigned char>(v >> 8), static_cast<unsigned char>(v)};
        out.write(reinterpret_cast<char*>(b), 4);
    };
    be32(static_cast<std::uint32_t>(payload.size()));
    out.write(tag, 4);
    if (!payload.empty()) out.write(reinterpret_cast<const char*>(payload.data()), static_cast<std::streamsize>(payload.size()));
    std::uint32_t crc = crc32(0L, Z_NULL, 0);
    crc = crc32(crc, reinterpret_cast<const Bytef*>(tag), 4);
    if (!payload.empty()) crc = crc32(crc, payload.data(), static_cast<uInt>(payload.size()));
    be32(crc);
}

void write_png_rgb(const std::string& path, const std::vector<unsigned char>& rgb, int w, int h) {
    std::vector<unsigned char> raw;
    raw.reserve(static_cast<std::size_t>(h) * (1 + 3 * w));
    for (int r = 0; r < h; ++r) {
        raw.push_back(0); // filter: none
        raw.insert(raw.end(), rgb.begin() + std::size_t(r) * 3 * w, rgb.begin() + std::size_t(r + 1) * 3 * w);
    }
    uLongf bound = compressBound(static_cast<uLong>(raw.size()));
    std::vector<unsigned char> deflated(bound);
    if (compress2(deflated.data(), &bound, raw.data(), static_cast<uLong>(raw.size()), 9) != Z_OK)
        throw std::runtime_error("png compression failed");
    deflated.resize(bound);

    std::ofstream out(path, std::ios::binary);
    if (!out) throw std::runtime_error("cannot open for writing: " + path);
    static const unsigned char sig[8] = {137, 80, 78, 71, 13, 10, 26, 10};
    out.write(reinterpret_cast<const char*>(sig), 8);
    std::vector<unsigned char> ihdr(13);
    auto put32 = [&](int off, std::uint32_t v) {
        ihdr[off] = static_cast<unsigned char>(v >> 24);
        ihdr[off + 1] = static_cast<unsigned char>(v >> 16);
        ihdr[off + 2] = static_cast<unsigned char>(v >> 8);
        ihdr[off + 3] = static_cast<unsigned char>(v);
    };
    put32(0, static_cast<std::uint32_t>(w));
    put32(4, static_cast<std::uint32_t>(h));
    ihdr[8] = 8;  // bit depth
    ihdr[9] = 2;  // RGB
    ihdr[10] = ihdr[11] = ihdr[12] = 0;
    png_chunk(out, "IHDR", ihdr);
    png_chunk(out, "IDAT", deflated);
    png_chunk(out, "IEND", {});
}

} // namespace

void write_png_modulus(const std::string& path, const CVec& data, int side) {
    double mx = 0.0;
    for (const auto& v : data) mx = std::max(mx, std::abs(v));
    std::vector<unsigned char> rgb(data.size() * 3);
    for (std::size_t i = 0; i < data.size(); ++i) {
        double g = mx > 0.0 ? std::abs(data[i]) / mx : 0.0;
        auto b = static_cast<unsigned char>(std::lround(255.0 * g));
        rgb[3 * i] = rgb[3 * i + 1] = rgb[3 * i + 2] = b;
    }
    write_png_rgb(path, rgb, side, side);
}

void write_png_phase(const std::string& path, const CVec& data, int side) {
    std::vector<unsigned char> rgb(data.size() * 3);
    for (std::size_t i = 0; i < data.size(); ++i) {
        double hue = (std::arg(data[i]) + 3.14159265358979323846) / (2.0 * 3.14159265358979323846);
        double h6 = hue * 6.0;
        int sector = static_cast<int>(h6) % 6;
        double fr = h6 - std::floor(h6);
        double q = 1.0 - fr, t = fr;
        double r = 0, g = 0, b = 0;
        switch (sector) {
            case 0: r = 1; g = t; b = 0; break;
            case 1: r = q; g = 1; b = 0; break;
            case 2: r = 0; g = 1; b = t; break;
            case 3: r = 0; g = q; b = 1; break;
            case 4: r = t; g = 0; b = 1; break;
            default: r = 1; g = 0; b = q; break;
        }
        rgb[3 * i] = static_cast<unsigned char>(std::lround(255.0 * r));
        rgb[3 * i + 1] = static_cast<unsigned char>(std::lround(255.0 * g));
        rgb[3 * i + 2] = static_cast<unsigned char>(std::lround(255.0 * b));
    }
    write_png_rgb(path, rgb, side, side);
}

} // namespace bpr::io
