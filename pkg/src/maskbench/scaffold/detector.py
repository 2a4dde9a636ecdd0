"""The assembled two-stage detector.

One image per call. Training takes annotations plus a numpy random
generator (proposal jitter and RoI sampling) and returns raw loss
components; inference returns DetectionResults with pasted masks. In
gt_boxes proposal mode the final detection boxes are the proposals
themselves, so evaluation isolates mask quality from box-regression
quality (the box head still trains through its loss).
"""
from __future__ import annotations

from dataclasses import dataclass
from typing import Dict, List, Optional

import numpy as np
import torch
from torch import nn
from torch.nn import functional as F

from ..config import Config
from ..data.targets import make_mask_target
from ..data.types import BinaryMask
from ..errors import ConfigError
from ..evaluation.postprocess import postprocess_detections
from ..evaluation.types import Prediction
from ..training.losses import mask_loss
from .backbone import FeaturePyramid, PyramidBackbone
from .heads import BaselineMaskHead, DetectionHead, decode_boxes, encode_boxes, paste_mask
from .proposals import ProposalHead, RoiBatch, assign_pyramid_levels, propose, sample_rois
from .roi_align import roi_align


@dataclass
class DetectionResult:
    """One final detection with its mask at both grid and image resolution."""

    box: np.ndarray
    category_id: int
    score: float
    mask_probs: np.ndarray
    pasted_mask: BinaryMask

    def to_prediction(self, image_id: int) -> Prediction:
        return Prediction(
            image_id=image_id,
            category_id=self.category_id,
            score=self.score,
            box=self.box,
            mask=self.pasted_mask,
        )


class Detector(nn.Module):
    def __init__(self, config: Config):
        super().__init__()
        config.validate()
        self.config = config
        m = config.model
        self.backbone = PyramidBackbone(config)
        self.detection_head = DetectionHead(
            m.pyramid_channels, m.detection_roi_size, m.fc_dim, m.num_classes
        )
        # Imported lazily so either subpackage can be imported first.
        from ..heads.builder import build_mask_head

        self.mask_head = build_mask_head(config)
        self.proposal_head = (
            ProposalHead(config) if config.proposals.mode == "learned" else None
        )
        self.to(config.torch_dtype())

    # ---------------------------------------------------------------- utils

    def image_to_tensor(self, image: np.ndarray) -> torch.Tensor:
        if image.ndim != 3 or image.shape[2] != 3:
            raise ConfigError(
                "expected an [H, W, 3] image, got %s" % (image.shape,)
            )
        # Center [0, 1] inputs; the no-norm backbone has no bias correction.
        array = np.ascontiguousarray(np.transpose(image, (2, 0, 1))) - 0.5
        return torch.as_tensor(array, dtype=self.config.torch_dtype())

    def align_features(
        self,
        pyramid: FeaturePyramid,
        boxes: np.ndarray,
        level_index: np.ndarray,
        out_size: int,
    ) -> torch.Tensor:
        """Per-RoI aligned features, each box read from its assigned level."""
        m = self.config.model
        boxes = np.asarray(boxes, dtype=np.float64).reshape(-1, 4)
        n = len(boxes)
        c = pyramid.channels
        out = pyramid.feature(0).new_zeros((n, c, out_size, out_size))
        if n == 0:
            return out
        level_index = np.asarray(level_index, dtype=np.int64)
        for lvl in np.unique(level_index):
            idx = np.nonzero(level_index == lvl)[0]
            feats = roi_align(
                pyramid.feature(int(lvl)),
                boxes[idx],
                out_size,
                pyramid.stride(int(lvl)),
                m.sampling_ratio,
            )
            out[torch.as_tensor(idx, dtype=torch.long)] = feats
        return out

    def fusion_input(self, pyramid: FeaturePyramid):
        if self.mask_head.fusion is None:
            return None
        if self.config.model.fusion_source == "coarsest":
            stride, feat = pyramid.coarsest()
        else:
            stride, feat = pyramid.finest()
        return (feat, stride, pyramid.image_size)

    def parameter_count(self) -> int:
        return sum(p.numel() for p in self.parameters())

    def inference_parameter_count(self) -> int:
        """Parameters that participate in the inference graph."""
        return self.parameter_count() - self.mask_head.aux_parameter_count()

    # ------------------------------------------------------------- training

    def forward_train(
        self,
        image: np.ndarray,
        annotations,
        rng: np.random.Generator,
    ) -> Optional[dict]:
        """Loss components for one image, or None when nothing was sampled."""
        cfg = self.config
        tensor = self.image_to_tensor(image)
        pyramid = self.backbone(tensor)
        proposals = propose(
            pyramid,
            annotations,
            cfg.proposals.mode,
            cfg,
            rng=rng,
            head=self.proposal_head,
        )
        batch = sample_rois(
            proposals,
            annotations,
            cfg.sampling.rois_per_image,
            cfg.sampling.pos_fraction,
            cfg.sampling.fg_iou_threshold,
            rng,
        )
        if len(batch) == 0:
            return None

        det_feats = self.align_features(
            pyramid, batch.boxes, batch.level_index, cfg.model.detection_roi_size
        )
        logits, deltas = self.detection_head(det_feats)
        cls_targets = torch.as_tensor(
            [
                ann.category_id if ann is not None else 0
                for ann in batch.matched_gt
            ],
            dtype=torch.long,
        )
        l_cls = F.cross_entropy(logits, cls_targets)

        fg_idx = np.nonzero(batch.is_foreground)[0]
        if len(fg_idx):
            fg_t = torch.as_tensor(fg_idx, dtype=torch.long)
            fg_classes = cls_targets[fg_t]
            fg_deltas = deltas[fg_t, fg_classes - 1]
            gt_boxes = np.stack(
                [
                    np.asarray(batch.matched_gt[i].bbox_xyxy, dtype=np.float64)
                    for i in fg_idx
                ]
            )
            target_deltas = torch.as_tensor(
                encode_boxes(batch.boxes[fg_idx], gt_boxes), dtype=logits.dtype
            )
            l_box = F.smooth_l1_loss(fg_deltas, target_deltas, reduction="mean")
        else:
            l_box = logits.new_zeros(())

        if self.proposal_head is not None:
            obj_loss, reg_loss = self.proposal_losses(pyramid, annotations)
            l_box = l_box + obj_loss + reg_loss

        aux_scales = cfg.heads.quasi_multitask.scales
        if len(fg_idx):
            mask_feats = self.align_features(
                pyramid,
                batch.boxes[fg_idx],
                batch.level_index[fg_idx],
                cfg.model.mask_roi_size,
            )
            mask_logits, aux_out = self.mask_head(
                mask_feats,
                fusion_input=self.fusion_input(pyramid),
                compute_aux=bool(aux_scales),
            )
            classes = cls_targets[torch.as_tensor(fg_idx, dtype=torch.long)]
            side = cfg.model.mask_roi_size * 2
            targets = self._mask_targets(batch, fg_idx, side, mask_logits.dtype)
            l_mask = mask_loss(mask_logits, targets, classes)
            aux_losses = {}
            for scale, aux_logits in aux_out.items():
                aux_side = aux_logits.shape[-1]
                aux_targets = self._mask_targets(
                    batch, fg_idx, aux_side, aux_logits.dtype
                )
                aux_losses[scale] = mask_loss(aux_logits, aux_targets, classes)
        else:
            l_mask = logits.new_zeros(())
            aux_losses = {scale: logits.new_zeros(()) for scale in aux_scales}

        return {
            "l_cls": l_cls,
            "l_box": l_box,
            "l_mask": l_mask,
            "aux_losses": aux_losses,
            "num_rois": len(batch),
            "num_foreground": int(len(fg_idx)),
        }

    def _mask_targets(self, batch: RoiBatch, fg_idx, side: int, dtype):
        targets = np.stack(
            [
                make_mask_target(batch.matched_gt[i], batch.boxes[i], side)
                for i in fg_idx
            ]
        )
        return torch.as_tensor(targets, dtype=dtype)

    def proposal_losses(self, pyramid: FeaturePyramid, annotations):
        """Objectness BCE + box smooth-L1 for the learned proposal head."""
        head = self.proposal_head
        outputs = head(pyramid)
        gt_boxes = np.stack(
            [np.asarray(a.bbox_xyxy, dtype=np.float64) for a in annotations
             if not a.iscrowd]
        ) if any(not a.iscrowd for a in annotations) else np.zeros((0, 4))

        obj_logits, obj_targets, reg_preds, reg_targets = [], [], [], []
        from ..evaluation.iou import box_iou_matrix

        for (stride, feat), out in zip(pyramid.levels, outputs):
            _, h, w = feat.shape
            base = head.base_boxes(stride, h, w)
            logits = out[0].reshape(-1)
            deltas = out[1:5].reshape(4, -1).T
            if len(gt_boxes):
                iou = box_iou_matrix(base, gt_boxes)
                best_gt = iou.argmax(axis=1)
                best_iou = iou[np.arange(len(base)), best_gt]
                positive = best_iou >= 0.5
                # the best anchor per gt is always positive
                for j in range(len(gt_boxes)):
                    positive[int(iou[:, j].argmax())] = True
                negative = (best_iou < 0.3) & ~positive
            else:
                positive = np.zeros(len(base), dtype=bool)
                negative = np.ones(len(base), dtype=bool)
            labeled = positive | negative
            obj_logits.append(logits[torch.as_tensor(np.nonzero(labeled)[0])])
            obj_targets.append(
                torch.as_tensor(
                    positive[labeled].astype(np.float64), dtype=logits.dtype
                )
            )
            pos_idx = np.nonzero(positive)[0]
            if len(pos_idx):
                t = encode_boxes(base[pos_idx], gt_boxes[best_gt[pos_idx]])
                reg_preds.append(deltas[torch.as_tensor(pos_idx)])
                reg_targets.append(torch.as_tensor(t, dtype=logits.dtype))

        obj_logit_cat = torch.cat(obj_logits)
        obj_target_cat = torch.cat(obj_targets)
        obj_loss = F.binary_cross_entropy_with_logits(obj_logit_cat, obj_target_cat)
        if reg_preds:
            reg_loss = F.smooth_l1_loss(
                torch.cat(reg_preds), torch.cat(reg_targets), reduction="mean"
            )
        else:
            reg_loss = obj_loss.new_zeros(())
        return obj_loss, reg_loss

    # ------------------------------------------------------------ inference

    @torch.no_grad()
    def forward_inference(
        self, image: np.ndarray, annotations=None
    ) -> List[DetectionResult]:
        cfg = self.config
        was_training = self.training
        self.eval()
        try:
            tensor = self.image_to_tensor(image)
            pyramid = self.backbone(tensor)
            h, w = pyramid.image_size

            if cfg.proposals.mode == "gt_boxes":
                if not annotations:
                    return []
                proposals = propose(
                    pyramid, annotations, "gt_boxes", cfg, apply_jitter=False
                )
            else:
                proposals = propose(
                    pyramid, None, "learned", cfg, head=self.proposal_head
                )
            if len(proposals) == 0:
                return []

            det_feats = self.align_features(
                pyramid,
                proposals.boxes,
                proposals.level_index,
                cfg.model.detection_roi_size,
            )
            logits, deltas = self.detection_head(det_feats)
            probs = torch.softmax(logits, dim=1).cpu().numpy()
            deltas_np = deltas.cpu().numpy()

            n = len(proposals)
            k = cfg.model.num_classes
            boxes_all = np.zeros((n * k, 4), dtype=np.float64)
            scores_all = np.zeros(n * k, dtype=np.float64)
            labels_all = np.zeros(n * k, dtype=np.int64)
            for cls in range(1, k + 1):
                sl = slice((cls - 1) * n, cls * n)
                if cfg.proposals.mode == "gt_boxes":
                    boxes_all[sl] = proposals.boxes
                else:
                    boxes_all[sl] = decode_boxes(
                        proposals.boxes, deltas_np[:, cls - 1], (h, w)
                    )
                scores_all[sl] = probs[:, cls]
                labels_all[sl] = cls
            keep = postprocess_detections(
                boxes_all,
                scores_all,
                labels_all,
                cfg.eval.score_threshold,
                cfg.eval.nms_threshold,
                cfg.eval.max_detections,
            )
            if len(keep) == 0:
                return []

            final_boxes = boxes_all[keep]
            final_scores = scores_all[keep]
            final_labels = labels_all[keep]
            levels = assign_pyramid_levels(
                final_boxes,
                pyramid.num_levels,
                cfg.model.level_k0,
                cfg.model.level_canonical_scale,
            )
            mask_feats = self.align_features(
                pyramid, final_boxes, levels, cfg.model.mask_roi_size
            )
            mask_logits, _ = self.mask_head(
                mask_feats,
                fusion_input=self.fusion_input(pyramid),
                compute_aux=False,
            )
            results = []
            for i in range(len(keep)):
                probs_i = torch.sigmoid(
                    mask_logits[i, int(final_labels[i]) - 1]
                ).cpu().numpy()
                pasted = paste_mask(probs_i, final_boxes[i], (h, w))
                results.append(
                    DetectionResult(
                        box=final_boxes[i].copy(),
                        category_id=int(final_labels[i]),
                        score=float(final_scores[i]),
                        mask_probs=probs_i,
                        pasted_mask=pasted,
                    )
                )
            return results
        finally:
            if was_training:
                self.train()

    def predict(self, sample) -> List[Prediction]:
        """Inference on an ImageSample, returning evaluator predictions."""
        results = self.forward_inference(sample.image, sample.annotations)
        return [r.to_prediction(sample.image_id) for r in results]
