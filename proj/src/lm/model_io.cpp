#include "lm/model_io.hpp"

#include <cstring>
#include <fstream>

#include "util/binio.hpp"

namespace memsteer::lm {

namespace {

constexpr size_t magic_len = sizeof(model_magic);  // includes the trailing NUL

void write_config(std::ostream& out, const ModelConfig& c) {
    write_u32(out, static_cast<uint32_t>(c.num_layers));
    write_u32(out, static_cast<uint32_t>(c.model_dim));
    write_u32(out, static_cast<uint32_t>(c.num_heads));
    write_u32(out, static_cast<uint32_t>(c.vocab_size));
    write_u32(out, static_cast<uint32_t>(c.max_seq_len));
    write_u32(out, static_cast<uint32_t>(c.image_prefix_len));
    write_u32(out, static_cast<uint32_t>(c.feature_dim));
    write_i64(out, c.seed);
}

ModelConfig read_config(std::istream& in) {
    ModelConfig c;
    c.num_layers = static_cast<int>(read_u32(in, "config.num_layers"));
    c.model_dim = static_cast<int>(read_u32(in, "config.model_dim"));
    c.num_heads = static_cast<int>(read_u32(in, "config.num_heads"));
    c.vocab_size = static_cast<int>(read_u32(in, "config.vocab_size"));
    c.max_seq_len = static_cast<int>(read_u32(in, "config.max_seq_len"));
    c.image_prefix_len = static_cast<int>(read_u32(in, "config.image_prefix_len"));
    c.feature_dim = static_cast<int>(read_u32(in, "config.feature_dim"));
    c.seed = read_i64(in, "config.seed");
    return c;
}

}  // namespace

void save_model(const Model& m, const std::filesystem::path& path) {
    std::ofstream out(path, std::ios::binary);
    if (!out) fail(ErrorKind::not_found, "cannot open " + path.string() + " for writing");
    write_bytes(out, model_magic, magic_len);
    write_u32(out, model_format_version);
    write_config(out, m.config);
    for (const auto& p : m.params()) {
        write_u32(out, static_cast<uint32_t>(p.name.size()));
        write_bytes(out, p.name.data(), p.name.size());
        write_u32(out, static_cast<uint32_t>(p.shape.size()));
        size_t numel = 1;
        for (size_t s : p.shape) {
            write_u64(out, s);
            numel *= s;
        }
        if (numel != p.data->size())
            fail(ErrorKind::internal, "tensor '" + p.name + "' shape/storage mismatch");
        for (double v : *p.data) write_f64(out, v);
    }
}

Model load_model(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) fail(ErrorKind::not_found, "cannot open " + path.string());

    char magic[magic_len];
    in.read(magic, magic_len);
    if (static_cast<size_t>(in.gcount()) != magic_len ||
        std::memcmp(magic, model_magic, magic_len) != 0)
        fail(ErrorKind::bad_magic, "not a model file: " + path.string());

    uint32_t version = read_u32(in, "format version");
    if (version != model_format_version)
        fail(ErrorKind::bad_version, "model format version " + std::to_string(version) +
                                         " unsupported (expected " +
                                         std::to_string(model_format_version) + ")");

    ModelConfig config = read_config(in);
    config.validate();

    Model m;
    m.config = config;
    const size_t d = static_cast<size_t>(config.model_dim);
    const size_t ff = 4 * d;
    m.blocks.resize(static_cast<size_t>(config.num_layers));
    (void)ff;

    for (auto& p : m.params()) {
        uint32_t name_len = read_u32(in, "tensor name length");
        std::string name(name_len, '\0');
        read_bytes(in, name.data(), name_len, "tensor name");
        if (name != p.name)
            fail(ErrorKind::schema,
                 "unexpected tensor '" + name + "' (expected '" + p.name + "')");
        uint32_t ndim = read_u32(in, "tensor '" + name + "' rank");
        if (ndim != p.shape.size())
            fail(ErrorKind::schema, "tensor '" + name + "' rank mismatch");
        size_t numel = 1;
        for (uint32_t i = 0; i < ndim; ++i) {
            uint64_t dim = read_u64(in, "tensor '" + name + "' shape");
            if (dim != p.shape[i]) fail(ErrorKind::schema, "tensor '" + name + "' shape mismatch");
            numel *= dim;
        }
        p.data->resize(numel);
        for (size_t i = 0; i < numel; ++i)
            (*p.data)[i] = read_f64(in, "tensor '" + name + "' payload");
    }
    char extra;
    if (in.read(&extra, 1) && in.gcount() == 1)
        fail(ErrorKind::schema, "trailing bytes after the last tensor: " + path.string());
    return m;
}

}  // namespace memsteer::lm
