"""Robust pricing and hedging under model uncertainty on finite scenario trees."""
