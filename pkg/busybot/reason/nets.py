"""Scene-graph inference and gated message-passing dynamics."""

from dataclasses import dataclass

import numpy as np

from busybot.exceptions import ContractError
from busybot.learncore import tensor as T
from busybot.learncore.layers import MLP, Conv1d, Module
from busybot.reason.features import NODE_DIM, NODE_SLOTS

ACTION_DIM = 6
EDGE_TYPES = 2


def _off_diagonal(n):
    return (1.0 - np.eye(n))[..., None]


def pair_mask(occupied):
    """(..., N, N, 1) mask of occupied off-diagonal pairs."""
    occupied = np.asarray(occupied, dtype=np.float64)
    n = occupied.shape[-1]
    return (occupied[..., :, None] * occupied[..., None, :])[..., None] * _off_diagonal(n)


def slot_actions(actions, acted, slots=NODE_SLOTS):
    """Scatter per-step action vectors onto the acted slot; every other slot gets zeros."""
    actions = np.asarray(actions, dtype=np.float64)
    acted = np.asarray(acted)
    if np.any(acted >= slots) or np.any(acted < -1):
        raise ContractError(f"acted indices must lie in [-1, {slots}), got {acted}")
    out = np.zeros(acted.shape + (slots, ACTION_DIM))
    index = np.nonzero(acted >= 0)
    out[index + (acted[index],)] = actions[index]
    return out


@dataclass
class SceneGraphEstimate:
    edge_types: np.ndarray  # N x N x 2
    edge_embeddings: np.ndarray  # N x N x E
    threshold: float = 0.5

    @property
    def relation_probability(self):
        return self.edge_types[..., 1]

    def edges(self, threshold=None):
        cut = self.threshold if threshold is None else threshold
        rows, cols = np.nonzero(self.relation_probability > cut)
        return {(int(i), int(j)) for i, j in zip(rows, cols)}

    def controllers_of(self, responder, threshold=None):
        return sorted(i for i, j in self.edges(threshold) if j == responder)

    def responders(self, threshold=None):
        return sorted({j for _, j in self.edges(threshold)})


class ActionEncoder(Module):
    def __init__(self, params, name, width):
        self.mlp = MLP(params, name, (ACTION_DIM, width, width, width), final_relu=True)

    def forward(self, slotted):
        return self.mlp(slotted)


def encode_actions(encoder, actions, acted):
    """T x N x A embeddings; non-acted slots embed the zero action."""
    return encoder(slot_actions(actions, acted)).data


class SpatialEncoder(Module):
    """h_ij = f_rel(n_i ⊕ n_j); h_i = f_obj(n_i ⊕ Σ_{j≠i} h_ij)."""

    def __init__(self, params, name, node_dim, width):
        self.f_rel = MLP(params, f"{name}.rel", (2 * node_dim, width, width, width, width), final_relu=True)
        self.f_obj = MLP(params, f"{name}.obj", (node_dim + width, width, width), final_relu=True)

    def forward(self, nodes):
        nodes = T.as_tensor(nodes)
        n = nodes.shape[-2]
        h_pair = self.f_rel(T.pairwise_concat(nodes))
        incoming = (h_pair * _off_diagonal(n)).sum(axis=-2)
        return self.f_obj(T.concat([nodes, incoming], axis=-1)), h_pair


def spatial_encode(encoder, nodes):
    h_node, h_pair = encoder(nodes)
    return h_node.data, h_pair.data


class _TemporalStack(Module):
    def __init__(self, params, name, in_channels, width):
        self.first = Conv1d(params, f"{name}.0", in_channels, width)
        self.second = Conv1d(params, f"{name}.1", width, width)

    def forward(self, x):
        """(..., T, C) -> (..., width), global mean over T."""
        return T.relu(self.second(T.relu(self.first(x)))).mean(axis=-2)


class InferenceNet(Module):
    """Infers edge-type distributions and edge embeddings from an interaction sequence."""

    def __init__(self, params, width=32, action_width=32, embedding=32, node_dim=NODE_DIM):
        self.spatial = SpatialEncoder(params, "inference.spatial", node_dim, width)
        self.actions = ActionEncoder(params, "inference.action", action_width)
        self.node_time = _TemporalStack(params, "inference.node_time", width + action_width, width)
        self.edge_time = _TemporalStack(params, "inference.edge_time", width + 2 * action_width, width)
        self.edge_type = MLP(params, "inference.edge_type", (3 * width, width, width, EDGE_TYPES))
        self.edge_embed = MLP(params, "inference.edge_embed",
                              (3 * width + EDGE_TYPES, width, width, embedding))

    def forward(self, nodes, actions, acted, occupied):
        """nodes (B, T, N, D), actions (B, T, 6), acted (B, T) -> e^d (B, N, N, 2), e^h (B, N, N, E)."""
        nodes = T.as_tensor(nodes)
        if nodes.shape[-3] < 2:
            raise ContractError(f"scene-graph inference needs T >= 2 frames, got {nodes.shape[-3]}")
        h_node, h_pair = self.spatial(nodes)
        a = self.actions(slot_actions(actions, acted, nodes.shape[-2]))
        node_stream = T.concat([h_node, a], axis=-1)  # B, T, N, C
        edge_stream = T.concat([h_pair, T.pairwise_concat(a)], axis=-1)  # B, T, N, N, C
        node_agg = self.node_time(node_stream.transpose(0, 2, 1, 3))
        edge_agg = self.edge_time(edge_stream.transpose(0, 2, 3, 1, 4))
        pair_input = T.concat([T.pairwise_concat(node_agg), edge_agg], axis=-1)
        mask = pair_mask(occupied)
        forced = (1.0 - mask) * np.array([1.0, 0.0])
        edge_types = T.softmax(self.edge_type(pair_input), axis=-1) * mask + forced
        edge_embeddings = self.edge_embed(T.concat([pair_input, edge_types], axis=-1))
        return edge_types, edge_embeddings


def complete_graph(occupied, embedding=32):
    """Fixed graph with p(type 1) = 1 on every occupied off-diagonal pair and zero embeddings."""
    mask = pair_mask(occupied)
    edge_types = np.concatenate([1.0 - mask, mask], axis=-1)
    return edge_types, np.zeros(mask.shape[:-1] + (embedding,))


class DynamicsNet(Module):
    """n̂_i = n_i + MLP(n_i ⊕ Σ_j m_{j→i} ⊕ a_i), m_{j→i} = MLP(x_j ⊕ x_i ⊕ e^h_ji) · p(e^d_ji = 1)."""

    def __init__(self, params, width=32, action_width=32, embedding=32, node_dim=NODE_DIM):
        self.embedding = embedding
        self.actions = ActionEncoder(params, "dynamics.action", action_width)
        self.message = MLP(params, "dynamics.message",
                           (2 * (node_dim + action_width) + embedding, width, width), final_relu=True)
        self.update = MLP(params, "dynamics.update", (node_dim + width + action_width, width, node_dim),
                          zero_last=True)

    def forward(self, nodes, slotted_actions, edge_types, edge_embeddings, occupied):
        """nodes (..., N, D); graph tensors broadcast over the leading dimensions."""
        nodes = T.as_tensor(nodes)
        a = self.actions(slotted_actions)
        x = T.concat([nodes, a], axis=-1)
        pairs = T.pairwise_concat(x)
        embeddings = T.broadcast_to(edge_embeddings, pairs.shape[:-1] + (self.embedding,))
        relation = (T.as_tensor(edge_types) * np.array([0.0, 1.0])).sum(axis=-1, keepdims=True)
        gate = T.broadcast_to(relation, pairs.shape[:-1] + (1,))
        messages = self.message(T.concat([pairs, embeddings], axis=-1)) * gate
        incoming = messages.sum(axis=-3)
        delta = self.update(T.concat([nodes, incoming, a], axis=-1))
        keep = np.asarray(occupied, dtype=np.float64)[..., None]
        return (nodes + delta) * keep


def predict_next(dynamics, nodes, action, acted, graph, occupied):
    """One-step prediction for a single frame: nodes (N, D), action (6,), acted slot or -1."""
    slotted = slot_actions(np.asarray(action)[None], np.array([acted]), nodes.shape[0])[0]
    return dynamics(nodes, slotted, graph.edge_types, graph.edge_embeddings, occupied).data


def rollout(dynamics, graph, nodes, actions, acted, occupied):
    """Autoregressive predictions, one per action."""
    predictions = []
    current = np.asarray(nodes, dtype=np.float64)
    for action, index in zip(actions, acted):
        current = predict_next(dynamics, current, action, int(index), graph, occupied)
        predictions.append(current)
    return np.array(predictions).reshape((len(predictions),) + current.shape)
