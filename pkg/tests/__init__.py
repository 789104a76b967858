"""Test configuration"""
