#include "rom/checkpoint.hpp"

#include <cstdint>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <stdexcept>

namespace rom {

namespace {

namespace fs = std::filesystem;

void fail(const std::string& what)
{
    throw std::runtime_error("checkpoint: " + what);
}

void write_u32(std::ostream& os, std::uint32_t v)
{
    unsigned char buf[4];
    for (int i = 0; i < 4; ++i)
        buf[i] = static_cast<unsigned char>((v >> (8 * i)) & 0xff);
    os.write(reinterpret_cast<const char*>(buf), 4);
}

std::uint32_t read_u32(std::istream& is)
{
    unsigned char buf[4];
    is.read(reinterpret_cast<char*>(buf), 4);
    if (!is)
        fail("truncated weights file");
    std::uint32_t v = 0;
    for (int i = 0; i < 4; ++i)
        v |= static_cast<std::uint32_t>(buf[i]) << (8 * i);
    return v;
}

void atomic_write(const fs::path& path, const std::string& payload)
{
    const fs::path tmp = path.string() + ".tmp";
    {
        std::ofstream os(tmp, std::ios::binary | std::ios::trunc);
        if (!os)
            fail("cannot open '" + tmp.string() + "'");
        os.write(payload.data(), static_cast<std::streamsize>(payload.size()));
        if (!os)
            fail("write error on '" + tmp.string() + "'");
    }
    fs::rename(tmp, path);
}

std::vector<double> get_vector(const nlohmann::json& j)
{
    return j.get<std::vector<double>>();
}

} // namespace

const Matrix* Checkpoint::find(const std::string& name) const
{
    for (const auto& [n, m] : tensors)
        if (n == name)
            return &m;
    return nullptr;
}

void save_checkpoint(const std::string& dir, const Checkpoint& ck)
{
    fs::create_directories(dir);
    atomic_write(fs::path(dir) / "manifest.json", ck.manifest.dump(2) + "\n");

    std::string blob;
    {
        std::ostringstream os(std::ios::binary);
        for (const auto& [name, m] : ck.tensors) {
            write_u32(os, static_cast<std::uint32_t>(name.size()));
            os.write(name.data(), static_cast<std::streamsize>(name.size()));
            if (m.cols() == 1) {
                write_u32(os, 1);
                write_u32(os, static_cast<std::uint32_t>(m.rows()));
            } else {
                write_u32(os, 2);
                write_u32(os, static_cast<std::uint32_t>(m.rows()));
                write_u32(os, static_cast<std::uint32_t>(m.cols()));
            }
            os.write(reinterpret_cast<const char*>(m.data()),
                     static_cast<std::streamsize>(m.size() * sizeof(double)));
        }
        blob = os.str();
    }
    atomic_write(fs::path(dir) / "weights.bin", blob);
}

Checkpoint load_checkpoint(const std::string& dir)
{
    const fs::path mpath = fs::path(dir) / "manifest.json";
    std::ifstream ms(mpath);
    if (!ms)
        fail("cannot open '" + mpath.string() + "'");
    Checkpoint ck;
    try {
        ms >> ck.manifest;
    } catch (const nlohmann::json::exception& e) {
        fail("bad manifest: " + std::string(e.what()));
    }
    if (!ck.manifest.contains("format_version") ||
        ck.manifest["format_version"].get<int>() != kCheckpointFormatVersion)
        fail("unsupported checkpoint format version in '" + dir + "'");

    const fs::path wpath = fs::path(dir) / "weights.bin";
    std::ifstream ws(wpath, std::ios::binary);
    if (!ws)
        fail("cannot open '" + wpath.string() + "'");
    while (true) {
        unsigned char peek4[4];
        ws.read(reinterpret_cast<char*>(peek4), 4);
        if (ws.gcount() == 0)
            break;
        if (ws.gcount() != 4)
            fail("truncated record header");
        std::uint32_t name_len = 0;
        for (int i = 0; i < 4; ++i)
            name_len |= static_cast<std::uint32_t>(peek4[i]) << (8 * i);
        std::string name(name_len, '\0');
        ws.read(name.data(), name_len);
        const std::uint32_t rank = read_u32(ws);
        if (rank != 1 && rank != 2)
            fail("unsupported tensor rank in record '" + name + "'");
        const std::uint32_t rows = read_u32(ws);
        const std::uint32_t cols = (rank == 2) ? read_u32(ws) : 1;
        Matrix m(rows, cols);
        ws.read(reinterpret_cast<char*>(m.data()),
                static_cast<std::streamsize>(m.size() * sizeof(double)));
        if (!ws)
            fail("truncated payload in record '" + name + "'");
        ck.tensors.emplace_back(std::move(name), std::move(m));
    }
    return ck;
}

// ---- config JSON mirrors -------------------------------------------------

void to_json(nlohmann::json& j, const ParamSeqConfig& c)
{
    j = nlohmann::json{{"input_dim", c.input_dim},
                       {"latent_dim", c.latent_dim},
                       {"seq_len", c.seq_len},
                       {"n_params", c.n_params},
                       {"reducer_dims", c.reducer_dims},
                       {"enc_depth", c.enc_depth},
                       {"enc_hidden", c.enc_hidden},
                       {"regressor_hidden", c.regressor_hidden},
                       {"dec_depth", c.dec_depth},
                       {"dec_hidden", c.dec_hidden}};
}

void from_json(const nlohmann::json& j, ParamSeqConfig& c)
{
    c = ParamSeqConfig{};
    c.input_dim = j.value("input_dim", c.input_dim);
    c.latent_dim = j.value("latent_dim", c.latent_dim);
    c.seq_len = j.value("seq_len", c.seq_len);
    c.n_params = j.value("n_params", c.n_params);
    c.reducer_dims = j.value("reducer_dims", c.reducer_dims);
    c.enc_depth = j.value("enc_depth", c.enc_depth);
    c.enc_hidden = j.value("enc_hidden", c.enc_hidden);
    c.regressor_hidden = j.value("regressor_hidden", c.regressor_hidden);
    c.dec_depth = j.value("dec_depth", c.dec_depth);
    c.dec_hidden = j.value("dec_hidden", c.dec_hidden);
}

void to_json(nlohmann::json& j, const ForecastConfig& c)
{
    j = nlohmann::json{{"input_dim", c.input_dim},
                       {"state_dim", c.state_dim},
                       {"past_len", c.past_len},
                       {"horizon", c.horizon},
                       {"n_params", c.n_params},
                       {"enc_depth", c.enc_depth},
                       {"dec_depth", c.dec_depth},
                       {"param_net_hidden", c.param_net_hidden},
                       {"param_embed", c.param_embed},
                       {"merge_hidden", c.merge_hidden}};
}

void from_json(const nlohmann::json& j, ForecastConfig& c)
{
    c = ForecastConfig{};
    c.input_dim = j.value("input_dim", c.input_dim);
    c.state_dim = j.value("state_dim", c.state_dim);
    c.past_len = j.value("past_len", c.past_len);
    c.horizon = j.value("horizon", c.horizon);
    c.n_params = j.value("n_params", c.n_params);
    c.enc_depth = j.value("enc_depth", c.enc_depth);
    c.dec_depth = j.value("dec_depth", c.dec_depth);
    c.param_net_hidden = j.value("param_net_hidden", c.param_net_hidden);
    c.param_embed = j.value("param_embed", c.param_embed);
    c.merge_hidden = j.value("merge_hidden", c.merge_hidden);
}

void to_json(nlohmann::json& j, const TrainConfig& c)
{
    j = nlohmann::json{{"max_epochs", c.max_epochs},
                       {"patience", c.patience},
                       {"early_stop", c.early_stop},
                       {"learning_rate", c.learning_rate},
                       {"batch_size", c.batch_size},
                       {"val_fraction", c.val_fraction},
                       {"recon_weight", c.recon_weight},
                       {"seed", c.seed},
                       {"verbose", c.verbose}};
}

void from_json(const nlohmann::json& j, TrainConfig& c)
{
    c = TrainConfig{};
    c.max_epochs = j.value("max_epochs", c.max_epochs);
    c.patience = j.value("patience", c.patience);
    c.early_stop = j.value("early_stop", c.early_stop);
    c.learning_rate = j.value("learning_rate", c.learning_rate);
    c.batch_size = j.value("batch_size", c.batch_size);
    c.val_fraction = j.value("val_fraction", c.val_fraction);
    c.recon_weight = j.value("recon_weight", c.recon_weight);
    c.seed = j.value("seed", c.seed);
    c.verbose = j.value("verbose", c.verbose);
}

// ---- model bundles ---------------------------------------------------------

namespace {

nlohmann::json history_json(const TrainHistory& h)
{
    return nlohmann::json{{"epochs", h.train_loss.size()},
                          {"best_epoch", h.best_epoch},
                          {"best_val", h.best_val},
                          {"seconds", h.seconds}};
}

nlohmann::json scaler_json(const InputScaler& s)
{
    return nlohmann::json{{"lo", s.lo}, {"hi", s.hi}};
}

InputScaler scaler_from_json(const nlohmann::json& j)
{
    InputScaler s;
    s.lo = get_vector(j.at("lo"));
    s.hi = get_vector(j.at("hi"));
    return s;
}

void append_pod_and_scaling(Checkpoint& ck, const PODBasis& basis,
                            const ScalingRecord& scaling)
{
    ck.manifest["pod"] = {{"n_dofs", basis.n_dofs},
                          {"n_channels", basis.n_channels},
                          {"n_modes", basis.n_modes}};
    ck.manifest["scaling_enabled"] = scaling.enabled;
    for (std::size_t c = 0; c < basis.n_channels; ++c) {
        ck.tensors.emplace_back("pod.block" + std::to_string(c), basis.blocks[c]);
        Matrix sv(basis.singular_values[c].size(), 1);
        for (std::size_t i = 0; i < basis.singular_values[c].size(); ++i)
            sv(i, 0) = basis.singular_values[c][i];
        ck.tensors.emplace_back("pod.sv" + std::to_string(c), std::move(sv));
    }
    if (scaling.enabled) {
        Matrix lo(scaling.min_vals.size(), 1), hi(scaling.max_vals.size(), 1);
        for (std::size_t i = 0; i < scaling.min_vals.size(); ++i) {
            lo(i, 0) = scaling.min_vals[i];
            hi(i, 0) = scaling.max_vals[i];
        }
        ck.tensors.emplace_back("scaling.min", std::move(lo));
        ck.tensors.emplace_back("scaling.max", std::move(hi));
    }
}

void extract_pod_and_scaling(const Checkpoint& ck, PODBasis& basis, ScalingRecord& scaling)
{
    const auto& pj = ck.manifest.at("pod");
    basis.n_dofs = pj.at("n_dofs").get<std::size_t>();
    basis.n_channels = pj.at("n_channels").get<std::size_t>();
    basis.n_modes = pj.at("n_modes").get<std::size_t>();
    for (std::size_t c = 0; c < basis.n_channels; ++c) {
        const Matrix* block = ck.find("pod.block" + std::to_string(c));
        const Matrix* sv = ck.find("pod.sv" + std::to_string(c));
        if (!block || !sv)
            fail("missing POD tensors");
        basis.blocks.push_back(*block);
        std::vector<double> svv(sv->rows());
        for (std::size_t i = 0; i < sv->rows(); ++i)
            svv[i] = (*sv)(i, 0);
        basis.singular_values.push_back(std::move(svv));
    }
    scaling.enabled = ck.manifest.at("scaling_enabled").get<bool>();
    if (scaling.enabled) {
        const Matrix* lo = ck.find("scaling.min");
        const Matrix* hi = ck.find("scaling.max");
        if (!lo || !hi)
            fail("missing scaling tensors");
        scaling.min_vals.resize(lo->rows());
        scaling.max_vals.resize(hi->rows());
        for (std::size_t i = 0; i < lo->rows(); ++i) {
            scaling.min_vals[i] = (*lo)(i, 0);
            scaling.max_vals[i] = (*hi)(i, 0);
        }
    }
}

} // namespace

Checkpoint make_mu_checkpoint(ParamSeqModel& model, const PODBasis& basis,
                              const ScalingRecord& scaling, const TrainHistory& history,
                              std::uint64_t seed)
{
    Checkpoint ck;
    ck.manifest["format_version"] = kCheckpointFormatVersion;
    ck.manifest["kind"] = "mu";
    ck.manifest["dims"] = model.cfg;
    ck.manifest["seeds"] = {{"master", seed}};
    ck.manifest["history"] = history_json(history);
    ck.manifest["input_scaler"] = scaler_json(model.scaler);
    for (const auto& p : model.parameters())
        ck.tensors.emplace_back(p.name, *p.value);
    append_pod_and_scaling(ck, basis, scaling);
    return ck;
}

Checkpoint make_t_checkpoint(ForecastModel& model, const PODBasis& basis,
                             const ScalingRecord& scaling, const TrainHistory& history,
                             std::uint64_t seed)
{
    Checkpoint ck;
    ck.manifest["format_version"] = kCheckpointFormatVersion;
    ck.manifest["kind"] = "t";
    ck.manifest["dims"] = model.cfg;
    ck.manifest["seeds"] = {{"master", seed}};
    ck.manifest["history"] = history_json(history);
    ck.manifest["input_scaler"] = scaler_json(model.scaler);
    for (const auto& p : model.parameters())
        ck.tensors.emplace_back(p.name, *p.value);
    append_pod_and_scaling(ck, basis, scaling);
    return ck;
}

MuCheckpointData mu_from_checkpoint(const Checkpoint& ck)
{
    if (ck.manifest.at("kind").get<std::string>() != "mu")
        fail("checkpoint is not a mu-model bundle");
    MuCheckpointData out;
    const ParamSeqConfig cfg = ck.manifest.at("dims").get<ParamSeqConfig>();
    out.model = ParamSeqModel(cfg, 0);
    out.model.scaler = scaler_from_json(ck.manifest.at("input_scaler"));
    for (auto& p : out.model.parameters()) {
        const Matrix* m = ck.find(p.name);
        if (!m)
            fail("missing tensor '" + p.name + "'");
        if (m->rows() != p.value->rows() || m->cols() != p.value->cols())
            fail("tensor '" + p.name + "' has the wrong shape");
        *p.value = *m;
    }
    extract_pod_and_scaling(ck, out.basis, out.scaling);
    return out;
}

TCheckpointData t_from_checkpoint(const Checkpoint& ck)
{
    if (ck.manifest.at("kind").get<std::string>() != "t")
        fail("checkpoint is not a t-model bundle");
    TCheckpointData out;
    const ForecastConfig cfg = ck.manifest.at("dims").get<ForecastConfig>();
    out.model = ForecastModel(cfg, 0);
    out.model.scaler = scaler_from_json(ck.manifest.at("input_scaler"));
    for (auto& p : out.model.parameters()) {
        const Matrix* m = ck.find(p.name);
        if (!m)
            fail("missing tensor '" + p.name + "'");
        if (m->rows() != p.value->rows() || m->cols() != p.value->cols())
            fail("tensor '" + p.name + "' has the wrong shape");
        *p.value = *m;
    }
    extract_pod_and_scaling(ck, out.basis, out.scaling);
    return out;
}

} // namespace rom
