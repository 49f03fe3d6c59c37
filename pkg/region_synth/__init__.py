from region_synth.region_feature_synthesizer import RegionFeatureSynthesizer

__all__ = ["RegionFeatureSynthesizer"]
