#include "ggode/dataset_io.hpp"

#include <cstring>
#include <fstream>

#include <json.hpp>

namespace ggode {

using nlohmann::json;

namespace {

constexpr char kMagic[8] = {'G', 'G', 'O', 'D', 'E', 'B', 'I', 'N'};
constexpr int kFormatVersion = 1;

void write_container(const std::string& path, const json& header, const std::vector<double>& payload) {
    std::ofstream f(path, std::ios::binary);
    if (!f) throw DataError("cannot open for writing: " + path);
    const std::string h = header.dump();
    const std::uint64_t hlen = h.size();
    f.write(kMagic, 8);
    f.write(reinterpret_cast<const char*>(&hlen), 8);
    f.write(h.data(), static_cast<std::streamsize>(h.size()));
    f.write(reinterpret_cast<const char*>(payload.data()),
            static_cast<std::streamsize>(payload.size() * sizeof(double)));
    if (!f) throw DataError("write failed: " + path);
}

std::pair<json, std::vector<double>> read_container(const std::string& path, const char* kind) {
    std::ifstream f(path, std::ios::binary);
    if (!f) throw DataError("cannot open: " + path);
    char magic[8];
    f.read(magic, 8);
    if (!f || std::memcmp(magic, kMagic, 8) != 0) throw DataError("bad magic bytes: " + path);
    std::uint64_t hlen = 0;
    f.read(reinterpret_cast<char*>(&hlen), 8);
    if (!f || hlen == 0 || hlen > (1ull << 32)) throw DataError("malformed header length: " + path);
    std::string h(hlen, '\0');
    f.read(h.data(), static_cast<std::streamsize>(hlen));
    if (!f) throw DataError("truncated header: " + path);
    json header;
    try {
        header = json::parse(h);
    } catch (const json::exception& e) {
        throw DataError(std::string("malformed header JSON: ") + e.what());
    }
    if (header.value("version", -1) != kFormatVersion)
        throw DataError("unsupported container version in " + path);
    if (header.value("kind", std::string()) != kind)
        throw DataError("container kind mismatch in " + path + " (expected " + kind + ")");
    std::vector<double> payload;
    f.seekg(0, std::ios::end);
    const std::streamoff end = f.tellg();
    const std::streamoff start = 16 + static_cast<std::streamoff>(hlen);
    if ((end - start) % static_cast<std::streamoff>(sizeof(double)) != 0)
        throw DataError("truncated payload: " + path);
    payload.resize(static_cast<std::size_t>((end - start) / sizeof(double)));
    f.seekg(start);
    f.read(reinterpret_cast<char*>(payload.data()),
           static_cast<std::streamsize>(payload.size() * sizeof(double)));
    if (!f) throw DataError("truncated payload: " + path);
    return {header, std::move(payload)};
}

json stats_to_json(const NormStats& st) {
    return json{{"mean_p", st.mean_p}, {"std_p", st.std_p}, {"mean_v", st.mean_v},
                {"std_v", st.std_v},   {"mean_a", st.mean_a}, {"std_a", st.std_a}};
}

NormStats stats_from_json(const json& j) {
    NormStats st;
    st.mean_p = j.at("mean_p").get<std::vector<double>>();
    st.std_p = j.at("std_p").get<std::vector<double>>();
    st.mean_v = j.at("mean_v").get<std::vector<double>>();
    st.std_v = j.at("std_v").get<std::vector<double>>();
    st.mean_a = j.at("mean_a").get<std::vector<double>>();
    st.std_a = j.at("std_a").get<std::vector<double>>();
    return st;
}

}  // namespace

void write_dataset(const std::string& path, const Dataset& ds) {
    json recs = json::array();
    std::vector<double> payload;
    for (const TrajectoryRecord& r : ds.records) {
        const std::size_t n = r.positions.size();
        json jr{{"env_id", r.env_id}, {"T", r.T}, {"N", r.N}, {"D", r.D}, {"dt", r.dt}};
        jr["offsets"] = {{"positions", payload.size()},
                         {"velocities", payload.size() + n},
                         {"accelerations", payload.size() + 2 * n}};
        recs.push_back(std::move(jr));
        payload.insert(payload.end(), r.positions.begin(), r.positions.end());
        payload.insert(payload.end(), r.velocities.begin(), r.velocities.end());
        payload.insert(payload.end(), r.accelerations.begin(), r.accelerations.end());
    }
    json header{{"version", kFormatVersion},
                {"kind", "dataset"},
                {"record_count", ds.records.size()},
                {"stats", stats_to_json(ds.stats)},
                {"records", std::move(recs)}};
    write_container(path, header, payload);
}

Dataset read_dataset(const std::string& path) {
    auto [header, payload] = read_container(path, "dataset");
    Dataset ds;
    ds.stats = stats_from_json(header.at("stats"));
    for (const json& jr : header.at("records")) {
        TrajectoryRecord r;
        r.env_id = jr.at("env_id").get<int>();
        r.T = jr.at("T").get<int>();
        r.N = jr.at("N").get<int>();
        r.D = jr.at("D").get<int>();
        r.dt = jr.at("dt").get<double>();
        const std::size_t n = static_cast<std::size_t>(r.T) * r.N * r.D;
        const std::size_t op = jr.at("offsets").at("positions").get<std::size_t>();
        const std::size_t ov = jr.at("offsets").at("velocities").get<std::size_t>();
        const std::size_t oa = jr.at("offsets").at("accelerations").get<std::size_t>();
        if (oa + n > payload.size()) throw DataError("record payload out of range: " + path);
        r.positions.assign(payload.begin() + op, payload.begin() + op + n);
        r.velocities.assign(payload.begin() + ov, payload.begin() + ov + n);
        r.accelerations.assign(payload.begin() + oa, payload.begin() + oa + n);
        r.times.resize(r.T);
        for (int t = 0; t < r.T; ++t) r.times[t] = t * r.dt;
        ds.records.push_back(std::move(r));
    }
    return ds;
}

void write_env_catalog(const std::string& path, const std::vector<EnvironmentSpec>& envs) {
    json list = json::array();
    for (const EnvironmentSpec& e : envs) {
        json je{{"env_id", e.env_id},
                {"kind", e.kind == EnvKind::LennardJones ? "lennard_jones" : "ramp_box"},
                {"box_lo", e.box_lo},
                {"box_hi", e.box_hi},
                {"boundary", e.boundary == Boundary::Periodic ? "periodic" : "reflective"}};
        if (e.kind == EnvKind::LennardJones) {
            je["temperature"] = e.temperature;
        } else {
            json ramps = json::array();
            for (const Segment2D& s : e.ramps) ramps.push_back({s.x0, s.y0, s.x1, s.y1});
            je["ramp_segments"] = std::move(ramps);
        }
        list.push_back(std::move(je));
    }
    json root{{"version", kFormatVersion}, {"environments", std::move(list)}};
    std::ofstream f(path);
    if (!f) throw DataError("cannot open for writing: " + path);
    f << root.dump(2) << "\n";
}

std::vector<EnvironmentSpec> read_env_catalog(const std::string& path) {
    std::ifstream f(path);
    if (!f) throw DataError("cannot open: " + path);
    json root;
    try {
        f >> root;
    } catch (const json::exception& e) {
        throw DataError(std::string("malformed catalog: ") + e.what());
    }
    if (root.value("version", -1) != kFormatVersion) throw DataError("unsupported catalog version");
    std::vector<EnvironmentSpec> envs;
    for (const json& je : root.at("environments")) {
        EnvironmentSpec e;
        e.env_id = je.at("env_id").get<int>();
        e.kind = je.at("kind").get<std::string>() == "lennard_jones" ? EnvKind::LennardJones
                                                                     : EnvKind::RampBox;
        e.box_lo = je.at("box_lo").get<std::vector<double>>();
        e.box_hi = je.at("box_hi").get<std::vector<double>>();
        e.boundary = je.at("boundary").get<std::string>() == "periodic" ? Boundary::Periodic
                                                                        : Boundary::Reflective;
        if (e.kind == EnvKind::LennardJones) {
            e.temperature = je.at("temperature").get<double>();
        } else if (je.contains("ramp_segments")) {
            for (const json& js : je.at("ramp_segments"))
                e.ramps.push_back(Segment2D{js.at(0).get<double>(), js.at(1).get<double>(),
                                            js.at(2).get<double>(), js.at(3).get<double>()});
        }
        envs.push_back(std::move(e));
    }
    return envs;
}

void write_tensors(const std::string& path, const std::vector<std::pair<std::string, Tensor>>& tensors,
                   const std::string& meta_json) {
    json list = json::array();
    std::vector<double> payload;
    for (const auto& [name, t] : tensors) {
        list.push_back({{"name", name}, {"shape", t.shape}, {"offset", payload.size()}});
        payload.insert(payload.end(), t.data.begin(), t.data.end());
    }
    json header{{"version", kFormatVersion},
                {"kind", "checkpoint"},
                {"meta", json::parse(meta_json.empty() ? "{}" : meta_json)},
                {"tensors", std::move(list)}};
    write_container(path, header, payload);
}

std::pair<std::vector<std::pair<std::string, Tensor>>, std::string> read_tensors(const std::string& path) {
    auto [header, payload] = read_container(path, "checkpoint");
    std::vector<std::pair<std::string, Tensor>> tensors;
    for (const json& jt : header.at("tensors")) {
        const auto shape = jt.at("shape").get<std::vector<int>>();
        const std::size_t off = jt.at("offset").get<std::size_t>();
        const std::size_t n = static_cast<std::size_t>(Tensor::numel_of(shape));
        if (off + n > payload.size()) throw DataError("tensor payload out of range: " + path);
        tensors.emplace_back(jt.at("name").get<std::string>(),
                             Tensor(shape, {payload.begin() + off, payload.begin() + off + n}));
    }
    return {std::move(tensors), header.at("meta").dump()};
}

void write_rollout(const std::string& path, const RolloutExport& r) {
    json header{{"version", kFormatVersion},
                {"kind", "rollout"},
                {"env_id", r.env_id},
                {"traj", r.traj},
                {"obs_len", r.obs_len},
                {"N", r.N},
                {"D", r.D},
                {"times", r.times}};
    write_container(path, header, r.values);
}

RolloutExport read_rollout(const std::string& path) {
    auto [header, payload] = read_container(path, "rollout");
    RolloutExport r;
    r.env_id = header.at("env_id").get<int>();
    r.traj = header.at("traj").get<int>();
    r.obs_len = header.at("obs_len").get<int>();
    r.N = header.at("N").get<int>();
    r.D = header.at("D").get<int>();
    r.times = header.at("times").get<std::vector<double>>();
    r.values = std::move(payload);
    if (r.values.size() != r.times.size() * static_cast<std::size_t>(r.N) * r.D)
        throw DataError("rollout payload size mismatch: " + path);
    return r;
}

std::uint64_t file_hash(const std::string& path) {
    std::ifstream f(path, std::ios::binary);
    if (!f) throw DataError("cannot open: " + path);
    std::uint64_t h = 1469598103934665603ull;
    char buf[65536];
    while (f) {
        f.read(buf, sizeof(buf));
        const std::streamsize n = f.gcount();
        for (std::streamsize i = 0; i < n; ++i) {
            h ^= static_cast<unsigned char>(buf[i]);
            h *= 1099511628211ull;
        }
    }
    return h;
}

}  // namespace ggode
