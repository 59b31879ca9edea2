#include "mimo/detect/gram.hpp"

namespace mimo {

ChannelGram channel_gram(const SystemInstance& instance) {
    ChannelGram g;
    g.gram.noalias() = instance.h.transpose() * instance.h;
    g.hty.noalias() = instance.h.transpose() * instance.y;
    g.noise_var = instance.noise_var;
    return g;
}

}  // namespace mimo
