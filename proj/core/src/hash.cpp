#include "chameleon/hash.hpp"

#include <openssl/evp.h>

#include <cstdio>
#include <fstream>
#include <sstream>

#include "chameleon/errors.hpp"

namespace chameleon::hash {

namespace {

std::string to_hex(const unsigned char* md, unsigned int len) {
    std::string out(2 * len, '0');
    static constexpr char kDigits[] = "0123456789abcdef";
    for (unsigned int i = 0; i < len; ++i) {
        out[2 * i] = kDigits[md[i] >> 4];
        out[2 * i + 1] = kDigits[md[i] & 0x0F];
    }
    return out;
}

}  // namespace

std::string sha256_hex(std::string_view data) {
    unsigned char md[EVP_MAX_MD_SIZE];
    unsigned int len = 0;
    if (EVP_Digest(data.data(), data.size(), md, &len, EVP_sha256(), nullptr) != 1) {
        throw Error("sha256 digest failed");
    }
    return to_hex(md, len);
}

std::string sha256_file_hex(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) {
        throw Error("cannot open for hashing: " + path.string());
    }
    std::ostringstream buf;
    buf << in.rdbuf();
    return sha256_hex(buf.str());
}

}  // namespace chameleon::hash
